use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use iphs_sim::config::{self, Overrides};
use iphs_sim::{exit, run_scenario, run_sweep, validate_scenario, RunSummary, Status};

/// Simulate irreversible port-Hamiltonian systems with discrete-gradient schemes.
#[derive(Debug, Parser)]
#[command(name = "iphs-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a scenario and write CSV, SVG plots and a JSON report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Discrete gradient: midpoint, mean_value or coordinate_increment.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        steps: Option<u64>,
        /// Output directory (replaces `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the model structure only; nothing is integrated.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one scenario per value of a `section.key` parameter, in parallel.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Parameter path such as `model.mu` or `run.h`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn print_summary(summary: &RunSummary) {
    let r = &summary.report;
    println!(
        "{}: {} of {} steps, h = {}, method {}",
        match r.status {
            Status::Ok => "ok",
            Status::SolverFailure => "solver failure",
            Status::BalanceViolation => "balance violation",
        },
        r.steps_completed,
        r.steps_requested,
        r.h,
        r.method
    );
    if let Some(b) = &r.balance {
        println!(
            "  max relative energy residual {:.3e}, min relative entropy production {:.3e} (threshold {:.1e})",
            b.max_relative_energy_residual, b.min_relative_entropy_production, b.threshold
        );
    }
    println!(
        "  final T = {:.6}, P = {:.6}, v = {:.3e}",
        r.final_temperature, r.final_pressure, r.final_velocity
    );
    if let Some(f) = &r.failure {
        println!("  {f}");
    }
    for path in &summary.artifacts {
        println!("  wrote {}", path.display());
    }
}

fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Run {
            config,
            method,
            h,
            steps,
            out,
        } => {
            let mut o = Overrides::default();
            if let Some(m) = method {
                o.set("method.kind", toml::Value::String(m));
            }
            if let Some(h) = h {
                o.set("run.h", toml::Value::Float(h));
            }
            if let Some(n) = steps {
                o.set("run.steps", toml::Value::Integer(n.min(i64::MAX as u64) as i64));
            }
            if let Some(dir) = out {
                o.set("output.dir", toml::Value::String(dir.to_string_lossy().into_owned()));
            }
            let cfg = match config::load(&config, &o) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit::CONFIG_ERROR;
                }
            };
            match run_scenario(&cfg) {
                Ok(summary) => {
                    print_summary(&summary);
                    summary.report.status.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::Validate { config } => {
            let cfg = match config::load(&config, &Overrides::default()) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit::CONFIG_ERROR;
                }
            };
            match validate_scenario(&cfg) {
                Ok(report) => {
                    print!("{report}");
                    if report.passed() {
                        exit::OK
                    } else {
                        exit::CONFIG_ERROR
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return exit::CONFIG_ERROR;
                }
            };
            // Reject a malformed value list before starting any run.
            if values.iter().any(|v| v.trim().is_empty()) {
                eprintln!("error: empty entry in --values");
                return exit::CONFIG_ERROR;
            }
            let results = match run_sweep(&text, &Overrides::default(), out.as_deref(), &param, &values) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return e.exit_code();
                }
            };
            let mut code = exit::OK;
            for r in &results {
                println!("{param} = {}", r.value);
                match &r.outcome {
                    Ok(summary) => print_summary(summary),
                    Err(e) => println!("  error: {e}"),
                }
                code = code.max(r.exit_code());
            }
            code
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG_ERROR } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    ExitCode::from(run(cli) as u8)
}
