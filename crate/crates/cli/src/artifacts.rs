//! CSV and plot emission for gas-piston trajectories.

use std::io::{self, Write};

use iphs::gas_piston::{self, GasPistonParams};
use iphs::{IphsSystem, Trajectory};

use crate::svg::{LinePlot, PlotError, Series};

pub const CSV_HEADER: [&str; 16] = [
    "step",
    "t",
    "S",
    "V",
    "q",
    "p",
    "H",
    "T",
    "P",
    "v",
    "y1",
    "y2",
    "u1",
    "u2",
    "energy_residual",
    "entropy_production",
];

/// 17 significant digits in scientific notation.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_all(fields: &mut Vec<String>, values: &[f64], width: usize) {
    for i in 0..width {
        fields.push(values.get(i).map(|&v| real(v)).unwrap_or_default());
    }
}

/// Writes one row per state. Row `k ≥ 1` carries the input, output and residuals
/// of the step that produced it; row 0 carries the first input, the continuous
/// output at `x0` and empty residuals.
pub fn write_csv<W: Write>(
    out: &mut W,
    traj: &Trajectory<f64>,
    sys: &IphsSystem<f64>,
    params: &GasPistonParams<f64>,
    u0: &[f64],
) -> io::Result<()> {
    if traj.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "empty trajectory"));
    }
    let energy = traj
        .observable("H")
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "trajectory lacks H"))?;
    writeln!(out, "{}", CSV_HEADER.join(","))?;
    let m = gas_piston::INPUT_DIM;
    for (k, x) in traj.states.iter().enumerate() {
        let mut fields = vec![k.to_string(), real(traj.times[k])];
        fields.extend(x.iter().map(|&v| real(v)));
        let temperature = gas_piston::temperature(x[0], x[1], params).unwrap_or(f64::NAN);
        let pressure = gas_piston::pressure(x[0], x[1], params).unwrap_or(f64::NAN);
        fields.extend([energy[k], temperature, pressure, x[3] / params.mass].map(real));
        if k == 0 {
            let y0 = sys.continuous_rhs(x, u0).map(|(_, y)| y).unwrap_or_default();
            push_all(&mut fields, &y0, m);
            push_all(&mut fields, u0, m);
            fields.extend([String::new(), String::new()]);
        } else {
            let rec = &traj.steps[k - 1];
            push_all(&mut fields, &rec.output, m);
            push_all(&mut fields, &rec.input, m);
            fields.push(real(rec.energy_residual));
            fields.push(real(rec.entropy_production));
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Position and volume, cumulative entropy production, per-step energy
/// residual, temperature; all against time.
pub fn plots(traj: &Trajectory<f64>, params: &GasPistonParams<f64>) -> Result<[String; 4], PlotError> {
    let t = &traj.times;
    let column = |i: usize| -> Vec<(f64, f64)> { t.iter().zip(&traj.states).map(|(&t, x)| (t, x[i])).collect() };

    let position = LinePlot::new("Height and volume", "t", "q, V")
        .with_series(Series::new("q", column(2)))
        .with_series(Series::new("V", column(1)));

    let mut total = 0.0;
    let mut cumulative = vec![(t[0], 0.0)];
    let mut residual = Vec::with_capacity(traj.steps.len());
    for (k, rec) in traj.steps.iter().enumerate() {
        total += rec.entropy_production;
        cumulative.push((t[k + 1], total));
        residual.push((t[k + 1], rec.energy_residual));
    }
    if traj.steps.is_empty() {
        cumulative.clear();
    }
    let entropy = LinePlot::new("Cumulative entropy production", "t", "entropy produced")
        .with_series(Series::new("cumulative production", cumulative));
    let energy =
        LinePlot::new("Energy balance residual", "t", "residual").with_series(Series::new("energy residual", residual));

    let temperature: Vec<(f64, f64)> = t
        .iter()
        .zip(&traj.states)
        .map(|(&t, x)| (t, gas_piston::temperature(x[0], x[1], params).unwrap_or(f64::NAN)))
        .collect();
    let temp = LinePlot::new("Gas temperature", "t", "T").with_series(Series::new("T", temperature));

    Ok([position.render()?, entropy.render()?, energy.render()?, temp.render()?])
}
