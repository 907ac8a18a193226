//! TOML scenario files.
//!
//! Every section and key is optional except `model.name`; missing values fall
//! back to the reference gas-piston scenario. Unknown keys are rejected.

use std::path::PathBuf;

use iphs::gas_piston::{self, GasPistonParams, GasPistonPorts};
use iphs::{DiscreteGradientKind, DiscreteGradientMethod, SolverConfig, SolverMethod};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    #[serde(default)]
    method: RawMethod,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    controls: RawControls,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: String,
    mass: Option<f64>,
    area: Option<f64>,
    gravity: Option<f64>,
    mu: Option<f64>,
    lambda_e: Option<f64>,
    c: Option<f64>,
    n0: Option<f64>,
    r: Option<f64>,
    u_ref: Option<f64>,
    v_ref: Option<f64>,
    s_ref: Option<f64>,
    heat_port: Option<bool>,
    force_port: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMethod {
    kind: Option<String>,
    quadrature_order: Option<i64>,
    coincidence_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    method: Option<String>,
    tolerance: Option<f64>,
    max_iterations: Option<i64>,
    fd_step: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    h: Option<f64>,
    steps: Option<i64>,
    horizon: Option<f64>,
    x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControls {
    u: Option<Vec<f64>>,
    table: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    csv: Option<String>,
    report: Option<String>,
    plot_position: Option<String>,
    plot_entropy: Option<String>,
    plot_energy: Option<String>,
    plot_temperature: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    GasPiston {
        params: GasPistonParams<f64>,
        ports: GasPistonPorts,
    },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::GasPiston { .. } => "gas_piston",
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Model::GasPiston { .. } => gas_piston::STATE_NAMES.len(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Model::GasPiston { .. } => gas_piston::INPUT_DIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Controls {
    Constant(Vec<f64>),
    /// Rows of `(start time, input)`.
    Table(Vec<(f64, Vec<f64>)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub dir: PathBuf,
    pub csv: PathBuf,
    pub report: PathBuf,
    /// Position/volume, cumulative entropy production, energy residual, temperature.
    pub plots: [PathBuf; 4],
}

/// Validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: Model,
    pub method: DiscreteGradientMethod<f64>,
    pub solver: SolverConfig<f64>,
    pub h: f64,
    pub steps: usize,
    pub x0: Vec<f64>,
    pub controls: Controls,
    pub output: OutputPaths,
}

/// Command-line replacements applied before validation, as `section.key` paths.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub entries: Vec<(String, toml::Value)>,
}

impl Overrides {
    pub fn set(&mut self, key: impl Into<String>, value: toml::Value) {
        self.entries.push((key.into(), value));
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses a bare TOML value (`0.5`, `"midpoint"`, `[1, 2]`), falling back to a
/// string for unquoted words.
pub fn parse_value(text: &str) -> toml::Value {
    let doc = format!("v = {text}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(text.to_string())),
        Err(_) => toml::Value::String(text.trim().to_string()),
    }
}

pub fn load(path: &std::path::Path, overrides: &Overrides) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, overrides).map_err(|e| match e {
        ConfigError::Parse(msg) => ConfigError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_config(text: &str, overrides: &Overrides) -> Result<SimConfig, ConfigError> {
    let mut raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    if !overrides.is_empty() {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for (key, value) in &overrides.entries {
            apply_override(&mut table, key, value.clone())?;
        }
        raw = RawConfig::deserialize(table).map_err(|e| ConfigError::Parse(format!("after overrides: {e}")))?;
    }
    raw.validate()
}

fn apply_override(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let Some((section, field)) = key.split_once('.') else {
        return Err(invalid(key, "expected `section.key`"));
    };
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let toml::Value::Table(inner) = entry else {
        return Err(invalid(section, "not a table"));
    };
    // An explicit step count replaces a horizon and vice versa.
    if section == "run" {
        match field {
            "steps" => {
                inner.remove("horizon");
            }
            "horizon" => {
                inner.remove("steps");
            }
            _ => {}
        }
    }
    inner.insert(field.to_string(), value);
    Ok(())
}

fn positive(key: &str, value: f64) -> Result<f64, ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(key, format!("must be positive, got {value}")))
    }
}

fn count(key: &str, value: i64) -> Result<usize, ConfigError> {
    if value >= 1 {
        Ok(value as usize)
    } else {
        Err(invalid(key, format!("must be at least 1, got {value}")))
    }
}

fn check_finite(key: &str, values: &[f64]) -> Result<(), ConfigError> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(invalid(key, format!("must be finite, got {v}"))),
        None => Ok(()),
    }
}

impl RawConfig {
    fn validate(self) -> Result<SimConfig, ConfigError> {
        let model = self.model.validate()?;
        let method = self.method.validate()?;
        let solver = self.solver.validate()?;

        let h = positive("run.h", self.run.h.unwrap_or(0.01))?;
        let steps = match (self.run.steps, self.run.horizon) {
            (Some(_), Some(_)) => return Err(invalid("run.steps", "give either steps or horizon, not both")),
            (Some(n), None) => count("run.steps", n)?,
            (None, Some(t)) => {
                let t = positive("run.horizon", t)?;
                let n = (t / h).round();
                if n < 1.0 {
                    return Err(invalid("run.horizon", format!("shorter than half a step (h = {h})")));
                }
                n as usize
            }
            (None, None) => (20.0 / h).round().max(1.0) as usize,
        };

        let x0 = self.run.x0.unwrap_or_else(gas_piston::initial_state);
        if x0.len() != model.state_dim() {
            return Err(invalid(
                "run.x0",
                format!(
                    "expected {} entries for {}, got {}",
                    model.state_dim(),
                    model.name(),
                    x0.len()
                ),
            ));
        }
        check_finite("run.x0", &x0)?;
        if x0[1] <= 0.0 {
            return Err(invalid("run.x0", format!("volume must be positive, got {}", x0[1])));
        }

        let m = model.input_dim();
        let controls = match (self.controls.u, self.controls.table) {
            (Some(_), Some(_)) => return Err(invalid("controls.u", "give either u or table, not both")),
            (Some(u), None) => {
                if u.len() != m {
                    return Err(invalid("controls.u", format!("expected {m} entries, got {}", u.len())));
                }
                check_finite("controls.u", &u)?;
                Controls::Constant(u)
            }
            (None, Some(table)) => Controls::Table(validate_table(table, m)?),
            (None, None) => Controls::Constant(gas_piston::reference_controls()),
        };

        Ok(SimConfig {
            model,
            method,
            solver,
            h,
            steps,
            x0,
            controls,
            output: self.output.resolve(),
        })
    }
}

fn validate_table(table: Vec<Vec<f64>>, m: usize) -> Result<Vec<(f64, Vec<f64>)>, ConfigError> {
    if table.is_empty() {
        return Err(invalid("controls.table", "needs at least one row"));
    }
    let mut rows = Vec::with_capacity(table.len());
    for (i, row) in table.into_iter().enumerate() {
        if row.len() != m + 1 {
            return Err(invalid(
                "controls.table",
                format!(
                    "row {i} must be [t, u1, .., u{m}] with {} entries, got {}",
                    m + 1,
                    row.len()
                ),
            ));
        }
        check_finite("controls.table", &row)?;
        rows.push((row[0], row[1..].to_vec()));
    }
    if rows.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(invalid("controls.table", "row times must be strictly increasing"));
    }
    Ok(rows)
}

impl RawModel {
    fn validate(self) -> Result<Model, ConfigError> {
        match self.name.as_str() {
            "gas_piston" => {}
            other => {
                return Err(invalid(
                    "model.name",
                    format!("unknown model `{other}` (available: gas_piston)"),
                ))
            }
        }
        let d = GasPistonParams::<f64>::default();
        let params = GasPistonParams {
            mass: self.mass.unwrap_or(d.mass),
            area: self.area.unwrap_or(d.area),
            gravity: self.gravity.unwrap_or(d.gravity),
            mu: self.mu.unwrap_or(d.mu),
            lambda_e: self.lambda_e.unwrap_or(d.lambda_e),
            c: self.c.unwrap_or(d.c),
            n0: self.n0.unwrap_or(d.n0),
            r: self.r.unwrap_or(d.r),
            u_ref: self.u_ref.unwrap_or(d.u_ref),
            v_ref: self.v_ref.unwrap_or(d.v_ref),
            s_ref: self.s_ref.unwrap_or(d.s_ref),
        };
        params.validate().map_err(|e| match e {
            iphs::Error::InvalidParameter { name, reason } => invalid(format!("model.{name}"), reason),
            other => invalid("model", other.to_string()),
        })?;
        let ports = GasPistonPorts {
            heat: self.heat_port.unwrap_or(true),
            force: self.force_port.unwrap_or(true),
        };
        Ok(Model::GasPiston { params, ports })
    }
}

impl RawMethod {
    fn validate(self) -> Result<DiscreteGradientMethod<f64>, ConfigError> {
        let kind = match self.kind {
            Some(name) => name
                .parse::<DiscreteGradientKind>()
                .map_err(|e| invalid("method.kind", e.to_string()))?,
            None => DiscreteGradientKind::MidpointGonzalez,
        };
        let mut method = DiscreteGradientMethod::new(kind);
        if let Some(order) = self.quadrature_order {
            let order = count("method.quadrature_order", order)?;
            method = method
                .with_quadrature_order(order)
                .map_err(|e| invalid("method.quadrature_order", e.to_string()))?;
        }
        if let Some(eps) = self.coincidence_threshold {
            method = method
                .with_coincidence_threshold(eps)
                .map_err(|e| invalid("method.coincidence_threshold", e.to_string()))?;
        }
        Ok(method)
    }
}

impl RawSolver {
    fn validate(self) -> Result<SolverConfig<f64>, ConfigError> {
        let mut cfg = SolverConfig::default();
        if let Some(name) = self.method {
            cfg.method = name.parse::<SolverMethod>().map_err(|e| invalid("solver.method", e))?;
        }
        if let Some(tol) = self.tolerance {
            cfg.tolerance = positive("solver.tolerance", tol)?;
        }
        if let Some(n) = self.max_iterations {
            cfg.max_iterations = count("solver.max_iterations", n)?;
        }
        if let Some(step) = self.fd_step {
            cfg.fd_step = positive("solver.fd_step", step)?;
        }
        Ok(cfg)
    }
}

impl RawOutput {
    fn resolve(self) -> OutputPaths {
        let dir = PathBuf::from(self.dir.unwrap_or_else(|| "out".to_string()));
        let file = |name: Option<String>, default: &str| dir.join(name.unwrap_or_else(|| default.to_string()));
        OutputPaths {
            csv: file(self.csv, "trajectory.csv"),
            report: file(self.report, "report.json"),
            plots: [
                file(self.plot_position, "position_volume.svg"),
                file(self.plot_entropy, "entropy_production.svg"),
                file(self.plot_energy, "energy_residual.svg"),
                file(self.plot_temperature, "temperature.svg"),
            ],
            dir,
        }
    }
}
