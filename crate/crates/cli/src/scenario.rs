//! Scenario execution: build the model, integrate, check balances, write artifacts.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use iphs::gas_piston::{self, GasPistonParams};
use iphs::{
    balance_diagnostics, integrate_trajectory, BalanceReport, ConstantControl, ControlSchedule, IphsSystem,
    PiecewiseConstantControl, Trajectory, ValidationReport,
};
use serde::Serialize;
use thiserror::Error;

use crate::config::{self, ConfigError, Controls, Model, Overrides, SimConfig};
use crate::{artifacts, exit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    SolverFailure,
    BalanceViolation,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => exit::OK,
            Status::SolverFailure => exit::SOLVER_FAILURE,
            Status::BalanceViolation => exit::BALANCE_VIOLATION,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("model construction failed: {0}")]
    Model(iphs::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("plotting failed: {0}")]
    Plot(#[from] crate::svg::PlotError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        exit::CONFIG_ERROR
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceSummary {
    pub threshold: f64,
    pub max_abs_energy_residual: f64,
    pub max_relative_energy_residual: f64,
    pub min_entropy_production: f64,
    pub min_relative_entropy_production: f64,
    pub cumulative_energy_balance: f64,
    pub cumulative_entropy_production: f64,
    pub energy_ok: bool,
    pub entropy_ok: bool,
}

impl From<&BalanceReport<f64>> for BalanceSummary {
    fn from(r: &BalanceReport<f64>) -> Self {
        Self {
            threshold: r.threshold,
            max_abs_energy_residual: r.max_abs_energy_residual,
            max_relative_energy_residual: r.max_relative_energy_residual,
            min_entropy_production: r.min_entropy_production,
            min_relative_entropy_production: r.min_relative_entropy_production,
            cumulative_energy_balance: r.cumulative_energy_balance,
            cumulative_entropy_production: r.cumulative_entropy_production,
            energy_ok: r.energy_ok,
            entropy_ok: r.entropy_ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub status: Status,
    pub model: &'static str,
    pub method: &'static str,
    pub solver: &'static str,
    pub h: f64,
    pub steps_requested: usize,
    pub steps_completed: usize,
    pub failure: Option<String>,
    pub balance: Option<BalanceSummary>,
    pub max_newton_iterations: usize,
    pub max_energy_drift: f64,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    pub final_temperature: f64,
    pub final_pressure: f64,
    pub final_velocity: f64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: RunReport,
    pub trajectory: Trajectory<f64>,
    pub artifacts: Vec<PathBuf>,
}

fn gas_piston_parts(cfg: &SimConfig) -> Result<(IphsSystem<f64>, &GasPistonParams<f64>), RunError> {
    let Model::GasPiston { params, ports } = &cfg.model;
    let sys = gas_piston::build_gas_piston_with(params, *ports).map_err(RunError::Model)?;
    Ok((sys, params))
}

fn schedule(controls: &Controls) -> Result<Box<dyn ControlSchedule<f64>>, RunError> {
    Ok(match controls {
        Controls::Constant(u) => Box::new(ConstantControl(u.clone())),
        Controls::Table(rows) => Box::new(PiecewiseConstantControl::new(rows.clone()).map_err(RunError::Model)?),
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Integrates the scenario and writes CSV, plots and the JSON report.
///
/// A solver failure still writes the partial trajectory; the report status
/// records it. Plots need at least one completed step.
pub fn run_scenario(cfg: &SimConfig) -> Result<RunSummary, RunError> {
    let (sys, params) = gas_piston_parts(cfg)?;
    let controls = schedule(&cfg.controls)?;
    let (trajectory, failure) = match integrate_trajectory(
        &sys,
        &cfg.method,
        &cfg.x0,
        controls.as_ref(),
        cfg.h,
        cfg.steps,
        &cfg.solver,
    ) {
        Ok(traj) => (traj, None),
        Err(aborted) => {
            let msg = aborted.to_string();
            (aborted.partial, Some(msg))
        }
    };

    let balance = balance_diagnostics(&trajectory).ok();
    let status = match (&failure, &balance) {
        (Some(_), _) => Status::SolverFailure,
        (None, Some(b)) if b.passed() => Status::Ok,
        (None, _) => Status::BalanceViolation,
    };

    let energy = trajectory.observable("H").unwrap_or(&[]);
    let e0 = energy.first().copied().unwrap_or(f64::NAN);
    let x = trajectory.final_state();
    let report = RunReport {
        status,
        model: cfg.model.name(),
        method: cfg.method.kind().name(),
        solver: cfg.solver.method.name(),
        h: cfg.h,
        steps_requested: cfg.steps,
        steps_completed: trajectory.steps.len(),
        failure,
        balance: balance.as_ref().map(BalanceSummary::from),
        max_newton_iterations: trajectory.steps.iter().map(|s| s.iterations).max().unwrap_or(0),
        max_energy_drift: energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max),
        final_time: trajectory.times.last().copied().unwrap_or(0.0),
        final_state: x.to_vec(),
        final_temperature: gas_piston::temperature(x[0], x[1], params).unwrap_or(f64::NAN),
        final_pressure: gas_piston::pressure(x[0], x[1], params).unwrap_or(f64::NAN),
        final_velocity: x[3] / params.mass,
    };

    let out = &cfg.output;
    let files = out.plots.iter().chain([&out.csv, &out.report]);
    for dir in files.filter_map(|p| p.parent()) {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|source| RunError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
        }
    }

    let mut artifacts_written = Vec::new();
    let u0 = controls.input(0, 0.0);
    let file = fs::File::create(&out.csv).map_err(|source| RunError::Io {
        path: out.csv.clone(),
        source,
    })?;
    artifacts::write_csv(&mut BufWriter::new(file), &trajectory, &sys, params, &u0).map_err(|source| RunError::Io {
        path: out.csv.clone(),
        source,
    })?;
    artifacts_written.push(out.csv.clone());

    if !trajectory.steps.is_empty() {
        for (path, svg) in out.plots.iter().zip(artifacts::plots(&trajectory, params)?) {
            write_file(path, svg.as_bytes())?;
            artifacts_written.push(path.clone());
        }
    }

    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&out.report, json.as_bytes())?;
    artifacts_written.push(out.report.clone());

    Ok(RunSummary {
        report,
        trajectory,
        artifacts: artifacts_written,
    })
}

/// Structural checks at the initial state, nearby states and every scheduled input.
pub fn validate_scenario(cfg: &SimConfig) -> Result<ValidationReport, RunError> {
    let (sys, params) = gas_piston_parts(cfg)?;
    let mut states = vec![cfg.x0.clone()];
    for scale in [0.5, 1.5] {
        let mut x = cfg.x0.clone();
        x[1] *= scale;
        x[3] += scale;
        states.push(x);
    }
    let inputs: Vec<Vec<f64>> = match &cfg.controls {
        Controls::Constant(u) => vec![u.clone()],
        Controls::Table(rows) => rows.iter().map(|(_, u)| u.clone()).collect(),
    };
    if let Some(u) = inputs.first() {
        if u[0] > 0.0 {
            if let Ok(eq) = gas_piston::equilibrium_state(u, cfg.x0[2], params) {
                states.push(eq);
            }
        }
    }
    Ok(sys.validate_structure(&states, &inputs))
}

pub struct SweepResult {
    pub value: String,
    pub outcome: Result<RunSummary, RunError>,
}

impl SweepResult {
    pub fn exit_code(&self) -> i32 {
        match &self.outcome {
            Ok(s) => s.report.status.exit_code(),
            Err(e) => e.exit_code(),
        }
    }
}

fn dir_name(param: &str, value: &str) -> String {
    let clean: String = value
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.+".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{param}={clean}")
}

/// Runs the scenario once per value of `param`, concurrently. Each run writes
/// into its own subdirectory of the base output directory.
pub fn run_sweep(
    text: &str,
    base: &Overrides,
    out_dir: Option<&Path>,
    param: &str,
    values: &[String],
) -> Result<Vec<SweepResult>, RunError> {
    let base_cfg = config::parse_config(text, base)?;
    let root = out_dir.map(Path::to_path_buf).unwrap_or(base_cfg.output.dir.clone());
    let configs: Vec<Result<SimConfig, ConfigError>> = values
        .iter()
        .map(|value| {
            let mut o = base.clone();
            o.set(param, config::parse_value(value));
            let dir = root.join(dir_name(param, value));
            o.set("output.dir", toml::Value::String(dir.to_string_lossy().into_owned()));
            config::parse_config(text, &o)
        })
        .collect();
    let outcomes: Vec<Result<RunSummary, RunError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .into_iter()
            .map(|cfg| scope.spawn(move || run_scenario(&cfg?)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    Ok(values
        .iter()
        .cloned()
        .zip(outcomes)
        .map(|(value, outcome)| SweepResult { value, outcome })
        .collect())
}
