//! Structure-preserving simulation of irreversible port-Hamiltonian systems.
//!
//! The discrete-gradient steppers in [`integrator`] satisfy the energy balance
//! `H(x′) − H(x) = h yᵀu` up to the nonlinear solver residual and produce
//! nonnegative entropy for any step size. Numerical code is generic over
//! [`Real`] (`f32`/`f64`); the aliases below fix the scalar to `f64` or `f32`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discrete_gradient;
pub mod error;
pub mod gas_piston;
pub mod integrator;
pub mod linalg;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod system;

pub use discrete_gradient::{
    chain_rule_residual, coordinate_increment_gradient, mean_value_gradient, midpoint_gradient, numeric_gradient,
    DiscreteGradientKind, DiscreteGradientMethod, ScalarField,
};
pub use error::{Error, Result};
pub use gas_piston::{build_gas_piston, build_gas_piston_with, GasPistonParams, GasPistonPorts};
pub use integrator::{
    balance_diagnostics, integrate_trajectory, rk4_reference_step, step_iphs, step_skew_gradient, BalanceReport,
    ConstantControl, ControlSchedule, IntegrationAborted, PiecewiseConstantControl, StepRecord, StepResult, Trajectory,
};
pub use linalg::Matrix;
pub use scalar::Real;
pub use solver::{solve_fixed_point, solve_newton_fd, SolveFailure, SolveOutcome, SolverConfig, SolverMethod};
pub use system::{
    discrete_bracket, discrete_port_bracket, DissipationTerm, IphsSystem, IrreversiblePort, ReversibleInternalTerm,
    ReversiblePort, SkewMatrix, ValidationReport,
};

pub type ScalarField64 = ScalarField<f64>;
pub type ScalarField32 = ScalarField<f32>;
pub type DiscreteGradientMethod64 = DiscreteGradientMethod<f64>;
pub type DiscreteGradientMethod32 = DiscreteGradientMethod<f32>;
pub type IphsSystem64 = IphsSystem<f64>;
pub type IphsSystem32 = IphsSystem<f32>;
pub type SkewMatrix64 = SkewMatrix<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type SolverConfig32 = SolverConfig<f32>;
pub type StepResult64 = StepResult<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type GasPistonParams64 = GasPistonParams<f64>;
