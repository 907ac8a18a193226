//! Config-driven simulation front end for the `iphs` integrators.

pub mod artifacts;
pub mod config;
pub mod scenario;
pub mod svg;

pub use config::{parse_config, ConfigError, Overrides, SimConfig};
pub use scenario::{run_scenario, run_sweep, validate_scenario, RunError, RunReport, RunSummary, Status};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG_ERROR: i32 = 1;
    pub const SOLVER_FAILURE: i32 = 2;
    pub const BALANCE_VIOLATION: i32 = 3;
}
