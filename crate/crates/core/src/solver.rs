//! Solvers for the implicit step equation `z = x + h Φ(x, z)`.
//!
//! Both solvers report a [`SolveOutcome`] instead of an error so that callers
//! can inspect the last iterate; steppers turn a non-converged outcome into
//! [`Error::SolverFailure`](crate::Error::SolverFailure).

use std::fmt;
use std::str::FromStr;

use crate::error::Result;
use crate::linalg::{all_finite, invalid, norm, solve_dense, sub, LinearSolveError, Matrix};
use crate::scalar::Real;

/// Line search gives up after this many step halvings.
pub const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    #[default]
    NewtonFd,
    FixedPoint,
}

impl SolverMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::NewtonFd => "newton_fd",
            Self::FixedPoint => "fixed_point",
        }
    }
}

impl fmt::Display for SolverMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "newton_fd" | "newton" => Ok(Self::NewtonFd),
            "fixed_point" => Ok(Self::FixedPoint),
            other => Err(format!("unknown solver `{other}` (expected newton_fd or fixed_point)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<R> {
    pub method: SolverMethod,
    /// Convergence when `|F(z)| ≤ tolerance · (1 + |z|)`.
    pub tolerance: R,
    pub max_iterations: usize,
    /// Relative forward-difference increment for the Jacobian.
    pub fd_step: R,
}

impl<R: Real> Default for SolverConfig<R> {
    /// `1e-12` tolerance and `1e-7` difference increment, raised to a few machine
    /// epsilons for `f32`.
    fn default() -> Self {
        Self {
            method: SolverMethod::NewtonFd,
            tolerance: R::at_least_eps(1e-12, 100.0),
            max_iterations: 50,
            fd_step: R::at_least_eps(1e-7, 1.0).max(R::epsilon().sqrt()),
        }
    }
}

impl<R: Real> SolverConfig<R> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > R::zero()) || !self.tolerance.is_finite() {
            return Err(invalid("tolerance", "must be positive"));
        }
        if self.max_iterations < 1 {
            return Err(invalid("max_iterations", "must be at least 1"));
        }
        if !(self.fd_step > R::zero()) || !self.fd_step.is_finite() {
            return Err(invalid("fd_step", "must be positive"));
        }
        Ok(())
    }

    pub fn converged(&self, residual_norm: R, root: &[R]) -> bool {
        residual_norm <= self.tolerance * (R::one() + norm(root))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveFailure {
    NonFinite,
    SingularJacobian,
    LineSearch,
    MaxIterations,
}

impl fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NonFinite => "non-finite residual",
            Self::SingularJacobian => "singular Jacobian",
            Self::LineSearch => "line search found no decrease",
            Self::MaxIterations => "iteration limit reached",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome<R> {
    pub root: Vec<R>,
    pub residual_norm: R,
    pub iterations: usize,
    pub converged: bool,
    pub failure: Option<SolveFailure>,
}

impl<R: Real> SolveOutcome<R> {
    fn done(root: Vec<R>, residual_norm: R, iterations: usize) -> Self {
        Self {
            root,
            residual_norm,
            iterations,
            converged: true,
            failure: None,
        }
    }

    fn failed(root: Vec<R>, residual_norm: R, iterations: usize, why: SolveFailure) -> Self {
        Self {
            root,
            residual_norm,
            iterations,
            converged: false,
            failure: Some(why),
        }
    }
}

/// Damped Newton iteration on `residual(z) = 0` with a forward-difference Jacobian.
///
/// Column `j` uses the increment `fd_step · (1 + |z_j|)` rounded to a power of two,
/// so `z_j + δ` is exact and linear residuals are differentiated without rounding.
/// Each Newton step is halved (at most [`MAX_HALVINGS`] times) until the residual
/// norm decreases; non-finite trial residuals count as no decrease, which is how
/// domain guards reject iterates. Once converged, one polishing step reusing
/// the last Jacobian is taken if it lowers the residual further; it is not
/// counted in `iterations`.
pub fn solve_newton_fd<R, F>(residual: F, guess: &[R], cfg: &SolverConfig<R>) -> SolveOutcome<R>
where
    R: Real,
    F: Fn(&[R]) -> Vec<R>,
{
    let n = guess.len();
    let mut z = guess.to_vec();
    let mut f = residual(&z);
    if !all_finite(&f) {
        return SolveOutcome::failed(z, R::infinity(), 0, SolveFailure::NonFinite);
    }
    let mut f_norm = norm(&f);
    if cfg.converged(f_norm, &z) {
        return SolveOutcome::done(z, f_norm, 0);
    }
    let two = R::lit(2.0);
    for iteration in 1..=cfg.max_iterations {
        let mut jac = Matrix::zeros(f.len(), n);
        let mut probe = z.clone();
        for j in 0..n {
            let raw = cfg.fd_step * (R::one() + z[j].abs());
            let step = two.powf(raw.log2().round());
            probe[j] = z[j] + step;
            let step = probe[j] - z[j];
            let fj = residual(&probe);
            probe[j] = z[j];
            if !all_finite(&fj) {
                return SolveOutcome::failed(z, f_norm, iteration, SolveFailure::NonFinite);
            }
            for (i, (&a, &b)) in fj.iter().zip(&f).enumerate() {
                jac.set(i, j, (a - b) / step);
            }
        }
        if f.len() != n {
            return SolveOutcome::failed(z, f_norm, iteration, SolveFailure::SingularJacobian);
        }
        let rhs: Vec<R> = f.iter().map(|&v| -v).collect();
        let delta = match solve_dense(&jac, &rhs) {
            Ok(d) => d,
            Err(LinearSolveError::Singular) => {
                return SolveOutcome::failed(z, f_norm, iteration, SolveFailure::SingularJacobian)
            }
        };

        let mut lambda = R::one();
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<R> = z.iter().zip(&delta).map(|(&a, &d)| a + lambda * d).collect();
            let ft = residual(&trial);
            if all_finite(&ft) {
                let ft_norm = norm(&ft);
                if ft_norm < f_norm {
                    accepted = Some((trial, ft, ft_norm));
                    break;
                }
            }
            lambda /= two;
        }
        let Some((trial, ft, ft_norm)) = accepted else {
            return SolveOutcome::failed(z, f_norm, iteration, SolveFailure::LineSearch);
        };
        z = trial;
        f = ft;
        f_norm = ft_norm;
        if cfg.converged(f_norm, &z) {
            polish(&residual, &jac, &mut z, &mut f_norm, &f);
            return SolveOutcome::done(z, f_norm, iteration);
        }
    }
    SolveOutcome::failed(z, f_norm, cfg.max_iterations, SolveFailure::MaxIterations)
}

/// One extra step with the last Jacobian, kept only if it lowers the residual.
/// Balances downstream are checked against quantities much smaller than the
/// tolerance, so the converged iterate is pushed to the round-off floor.
fn polish<R, F>(residual: &F, jac: &Matrix<R>, z: &mut Vec<R>, f_norm: &mut R, f: &[R])
where
    R: Real,
    F: Fn(&[R]) -> Vec<R>,
{
    if *f_norm == R::zero() {
        return;
    }
    let rhs: Vec<R> = f.iter().map(|&v| -v).collect();
    let Ok(delta) = solve_dense(jac, &rhs) else {
        return;
    };
    let trial: Vec<R> = z.iter().zip(&delta).map(|(&a, &d)| a + d).collect();
    let ft = residual(&trial);
    if all_finite(&ft) {
        let ft_norm = norm(&ft);
        if ft_norm < *f_norm {
            *z = trial;
            *f_norm = ft_norm;
        }
    }
}

/// Picard iteration `z ← map(z)`, stopping once `|map(z) − z| ≤ tolerance · (1 + |z|)`.
pub fn solve_fixed_point<R, F>(map: F, guess: &[R], cfg: &SolverConfig<R>) -> SolveOutcome<R>
where
    R: Real,
    F: Fn(&[R]) -> Vec<R>,
{
    let mut z = guess.to_vec();
    let mut image = map(&z);
    if !all_finite(&image) {
        return SolveOutcome::failed(z, R::infinity(), 0, SolveFailure::NonFinite);
    }
    let mut gap = norm(&sub(&image, &z));
    if cfg.converged(gap, &z) {
        return SolveOutcome::done(z, gap, 0);
    }
    for iteration in 1..=cfg.max_iterations {
        z = image;
        image = map(&z);
        if !all_finite(&image) {
            return SolveOutcome::failed(z, R::infinity(), iteration, SolveFailure::NonFinite);
        }
        gap = norm(&sub(&image, &z));
        if cfg.converged(gap, &z) {
            return SolveOutcome::done(z, gap, iteration);
        }
    }
    SolveOutcome::failed(z, gap, cfg.max_iterations, SolveFailure::MaxIterations)
}
