//! Discrete-gradient steppers, trajectory driver, balance diagnostics and an
//! explicit RK4 reference.
//!
//! One IPHS step solves
//!
//! ```text
//! (x′ − x)/h = Σᵢ γᵢ(x̄) {S,H}ᵈ_{Jᵢ} Jᵢ ∇̄H + Σ_α M_α ∇̄H
//!            + Σⱼ γ_port,j(x̄,u) {S_tot,H_tot}ᵈ_{gⱼ} gⱼ u + Σ_β g_Sβ u
//! ```
//!
//! with `x̄ = (x + x′)/2` and every discrete gradient taken at `(x, x′)`. Skew
//! symmetry then gives `H(x′) − H(x) = h yᵀu` and
//! `S(x′) − S(x) − h Σ yᵀτ = h (Σ γ ({S,H}ᵈ)² + Σ γ_port ({S_tot,H_tot}ᵈ)²)`.

use std::fmt;

use crate::discrete_gradient::{DiscreteGradientMethod, ScalarField};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, invalid, midpoint};
use crate::scalar::Real;
use crate::solver::{solve_fixed_point, solve_newton_fd, SolveOutcome, SolverConfig, SolverMethod};
use crate::system::{Assembled, IphsSystem, SkewMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<R> {
    pub x_next: Vec<R>,
    pub y: Vec<R>,
    pub solver: SolveOutcome<R>,
    /// `H(x′) − H(x) − h yᵀu`
    pub energy_residual: R,
    /// `S(x′) − S(x) − h Σ yᵀτ`
    pub entropy_production: R,
    /// `h Σ yᵀτ`
    pub entropy_flux: R,
    /// `h (Σ γ ({S,H}ᵈ)² + Σ γ_port ({S_tot,H_tot}ᵈ)²)`, computed from the brackets.
    pub entropy_source: R,
}

fn check_step<R: Real>(h: R) -> Result<()> {
    if h > R::zero() && h.is_finite() {
        Ok(())
    } else {
        Err(invalid("h", "step size must be positive"))
    }
}

fn implicit_residual<R: Real>(x: &[R], z: &[R], h: R, drift: &[R]) -> Vec<R> {
    x.iter().zip(z).zip(drift).map(|((&a, &b), &d)| b - a - h * d).collect()
}

fn nan_vec<R: Real>(n: usize) -> Vec<R> {
    vec![R::nan(); n]
}

/// Finest subdivision tried by the continuation fallback (`2^6` stages).
const MAX_CONTINUATION_LEVEL: u32 = 6;

fn solve_stage<R, P>(x: &[R], guess: &[R], h: R, solver: &SolverConfig<R>, drift: &P) -> SolveOutcome<R>
where
    R: Real,
    P: Fn(&[R]) -> Option<Vec<R>>,
{
    match solver.method {
        SolverMethod::NewtonFd => solve_newton_fd(
            |z: &[R]| match drift(z) {
                Some(d) => implicit_residual(x, z, h, &d),
                None => nan_vec(z.len()),
            },
            guess,
            solver,
        ),
        SolverMethod::FixedPoint => solve_fixed_point(
            |z: &[R]| match drift(z) {
                Some(d) => x.iter().zip(&d).map(|(&a, &v)| a + h * v).collect(),
                None => nan_vec(z.len()),
            },
            guess,
            solver,
        ),
    }
}

/// Solves `z = x + h Φ(z)` starting from `z = x`.
///
/// If Newton fails from `x` (stiff steps can trap it in a local minimum of the
/// residual norm), the equation is re-solved along `z = x + s h Φ(z)` for
/// `s = 1/N, 2/N, …, 1`, each stage warm-started from the previous root, with
/// `N = 2, 4, …, 2^6`. The last stage is the original equation, so the result
/// satisfies the same identities. Iteration counts are summed over stages.
fn solve_implicit<R, P>(x: &[R], h: R, solver: &SolverConfig<R>, drift: P) -> Result<SolveOutcome<R>>
where
    R: Real,
    P: Fn(&[R]) -> Option<Vec<R>>,
{
    solver.validate()?;
    let direct = solve_stage(x, x, h, solver, &drift);
    if direct.converged {
        return Ok(direct);
    }
    let mut spent = direct.iterations;
    if solver.method == SolverMethod::NewtonFd {
        'levels: for level in 1..=MAX_CONTINUATION_LEVEL {
            let stages = 1usize << level;
            let mut z = x.to_vec();
            let mut last = None;
            for i in 1..=stages {
                let s = R::lit(i as f64) / R::lit(stages as f64);
                let out = solve_stage(x, &z, s * h, solver, &drift);
                spent += out.iterations;
                if !out.converged {
                    continue 'levels;
                }
                z = out.root.clone();
                last = Some(out);
            }
            if let Some(mut out) = last {
                out.iterations = spent;
                return Ok(out);
            }
        }
    }
    Err(Error::SolverFailure {
        iterations: spent,
        residual_norm: direct.residual_norm.as_f64(),
        reason: direct.failure.map_or_else(String::new, |f| f.to_string()),
    })
}

/// Energy-preserving step of `ẋ = J ∇H`: solves `x′ = x + h J ∇̄H(x, x′)`.
pub fn step_skew_gradient<R: Real>(
    structure: &SkewMatrix<R>,
    hamiltonian: &ScalarField<R>,
    method: &DiscreteGradientMethod<R>,
    x: &[R],
    h: R,
    solver: &SolverConfig<R>,
) -> Result<StepResult<R>> {
    check_step(h)?;
    crate::error::check_len("state", hamiltonian.dimension(), x.len())?;
    crate::error::check_len("structure", hamiltonian.dimension(), structure.dimension())?;
    let drift = |z: &[R]| -> Option<Vec<R>> {
        let grad_h = method.evaluate(hamiltonian, x, z).ok()?;
        let mut d = vec![R::zero(); x.len()];
        for (di, v) in d.iter_mut().zip(structure.mul_vec(&grad_h)) {
            *di += v;
        }
        Some(d)
    };
    let outcome = solve_implicit(x, h, solver, drift)?;
    let x_next = outcome.root.clone();
    Ok(StepResult {
        energy_residual: hamiltonian.value(&x_next) - hamiltonian.value(x),
        x_next,
        y: Vec::new(),
        solver: outcome,
        entropy_production: R::zero(),
        entropy_flux: R::zero(),
        entropy_source: R::zero(),
    })
}

fn discrete_terms<R: Real>(
    sys: &IphsSystem<R>,
    method: &DiscreteGradientMethod<R>,
    x: &[R],
    z: &[R],
    u: &[R],
) -> Option<Assembled<R>> {
    if !sys.in_domain(z) {
        return None;
    }
    let mid = midpoint(x, z);
    if !sys.in_domain(&mid) {
        return None;
    }
    let grad_h = method.evaluate(sys.hamiltonian(), x, z).ok()?;
    let grad_s = if sys.entropy_is_linear() {
        sys.entropy().gradient(x)
    } else {
        method.evaluate(sys.entropy(), x, z).ok()?
    };
    Some(sys.assemble(&mid, &grad_s, &grad_h, u))
}

/// One step of the discrete-gradient IPHS scheme with `u` held over the step.
pub fn step_iphs<R: Real>(
    sys: &IphsSystem<R>,
    method: &DiscreteGradientMethod<R>,
    x: &[R],
    u: &[R],
    h: R,
    solver: &SolverConfig<R>,
) -> Result<StepResult<R>> {
    check_step(h)?;
    sys.check_state(x)?;
    sys.check_input(u)?;
    let outcome = solve_implicit(x, h, solver, |z: &[R]| {
        discrete_terms(sys, method, x, z, u).map(|a| a.drift)
    })?;
    let x_next = outcome.root.clone();
    let terms =
        discrete_terms(sys, method, x, &x_next, u).ok_or_else(|| Error::DomainViolation(format!("{x_next:?}")))?;

    let (hh, ss) = (sys.hamiltonian(), sys.entropy());
    let entropy_flux = h * terms.entropy_flux;
    Ok(StepResult {
        energy_residual: hh.value(&x_next) - hh.value(x) - h * dot(&terms.output, u),
        entropy_production: ss.value(&x_next) - ss.value(x) - entropy_flux,
        entropy_flux,
        entropy_source: h * terms.entropy_source,
        y: terms.output,
        x_next,
        solver: outcome,
    })
}

/// Input `u(k, t)` applied over step `k` starting at time `t`.
pub trait ControlSchedule<R> {
    fn input(&self, step: usize, t: R) -> Vec<R>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantControl<R>(pub Vec<R>);

impl<R: Real> ControlSchedule<R> for ConstantControl<R> {
    fn input(&self, _step: usize, _t: R) -> Vec<R> {
        self.0.clone()
    }
}

/// Piecewise-constant table: the row with the largest start time `≤ t` applies;
/// times before the first row use the first row.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantControl<R> {
    rows: Vec<(R, Vec<R>)>,
}

impl<R: Real> PiecewiseConstantControl<R> {
    pub fn new(rows: Vec<(R, Vec<R>)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(invalid("controls", "table needs at least one row"));
        }
        if rows.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(invalid("controls", "table times must be strictly increasing"));
        }
        let m = rows[0].1.len();
        if rows.iter().any(|r| r.1.len() != m) {
            return Err(invalid("controls", "table rows must share one input dimension"));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[(R, Vec<R>)] {
        &self.rows
    }
}

impl<R: Real> ControlSchedule<R> for PiecewiseConstantControl<R> {
    fn input(&self, _step: usize, t: R) -> Vec<R> {
        let idx = self.rows.partition_point(|(start, _)| *start <= t);
        self.rows[idx.saturating_sub(1)].1.clone()
    }
}

impl<R, F> ControlSchedule<R> for F
where
    F: Fn(usize, R) -> Vec<R>,
{
    fn input(&self, step: usize, t: R) -> Vec<R> {
        self(step, t)
    }
}

/// Record of the step that ends at the state with the same index plus one.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<R> {
    pub input: Vec<R>,
    pub output: Vec<R>,
    pub energy_residual: R,
    pub entropy_production: R,
    pub entropy_flux: R,
    pub entropy_source: R,
    pub iterations: usize,
    pub solver_residual: R,
}

/// States at uniformly spaced times plus per-step records.
///
/// `states` and `times` have one more entry than `steps`; `observables` are
/// per-state sequences (`H` and `S` are always present).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<R> {
    pub step_size: R,
    pub solver_tolerance: R,
    pub times: Vec<R>,
    pub states: Vec<Vec<R>>,
    pub steps: Vec<StepRecord<R>>,
    pub observables: Vec<(String, Vec<R>)>,
}

impl<R: Real> Trajectory<R> {
    fn start(x0: Vec<R>, h: R, tol: R) -> Self {
        Self {
            step_size: h,
            solver_tolerance: tol,
            times: vec![R::zero()],
            states: vec![x0],
            steps: Vec::new(),
            observables: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> &[R] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Evaluates `f` on every state and stores the sequence under `name`.
    pub fn add_observable(&mut self, name: impl Into<String>, f: impl Fn(&[R]) -> R) {
        let name = name.into();
        let values = self.states.iter().map(|x| f(x)).collect();
        match self.observables.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = values,
            None => self.observables.push((name, values)),
        }
    }

    pub fn observable(&self, name: &str) -> Option<&[R]> {
        self.observables
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

/// Failed run: the trajectory up to the last converged step and the cause.
#[derive(Debug, Clone)]
pub struct IntegrationAborted<R> {
    pub partial: Trajectory<R>,
    pub failed_step: usize,
    pub error: Error,
}

impl<R> fmt::Display for IntegrationAborted<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "integration aborted at step {}: {}", self.failed_step, self.error)
    }
}

impl<R: fmt::Debug> std::error::Error for IntegrationAborted<R> {}

/// Applies [`step_iphs`] `steps` times with `u_k = schedule.input(k, k h)`.
#[allow(clippy::result_large_err)]
pub fn integrate_trajectory<R: Real>(
    sys: &IphsSystem<R>,
    method: &DiscreteGradientMethod<R>,
    x0: &[R],
    schedule: &dyn ControlSchedule<R>,
    h: R,
    steps: usize,
    solver: &SolverConfig<R>,
) -> std::result::Result<Trajectory<R>, IntegrationAborted<R>> {
    let mut traj = Trajectory::start(x0.to_vec(), h, solver.tolerance);
    let abort = |traj: Trajectory<R>, k: usize, error: Error| {
        let mut partial = traj;
        finish(sys, &mut partial);
        IntegrationAborted {
            partial,
            failed_step: k,
            error,
        }
    };
    if steps < 1 {
        return Err(abort(traj, 0, invalid("steps", "must be at least 1")));
    }
    if let Err(e) = check_step(h).and_then(|_| sys.check_state(x0)) {
        return Err(abort(traj, 0, e));
    }
    let mut x = x0.to_vec();
    for k in 0..steps {
        let t = h * R::lit(k as f64);
        let u = schedule.input(k, t);
        match step_iphs(sys, method, &x, &u, h, solver) {
            Ok(step) => {
                traj.steps.push(StepRecord {
                    input: u,
                    output: step.y,
                    energy_residual: step.energy_residual,
                    entropy_production: step.entropy_production,
                    entropy_flux: step.entropy_flux,
                    entropy_source: step.entropy_source,
                    iterations: step.solver.iterations,
                    solver_residual: step.solver.residual_norm,
                });
                x = step.x_next;
                traj.times.push(h * R::lit((k + 1) as f64));
                traj.states.push(x.clone());
            }
            Err(e) => return Err(abort(traj, k, e)),
        }
    }
    finish(sys, &mut traj);
    Ok(traj)
}

fn finish<R: Real>(sys: &IphsSystem<R>, traj: &mut Trajectory<R>) {
    let (hh, ss) = (sys.hamiltonian().clone(), sys.entropy().clone());
    traj.add_observable("H", move |x| hh.value(x));
    traj.add_observable("S", move |x| ss.value(x));
}

/// Classical RK4 on the continuous vector field with `u` frozen.
pub fn rk4_reference_step<R: Real>(sys: &IphsSystem<R>, x: &[R], u: &[R], h: R) -> Result<Vec<R>> {
    let half = R::lit(0.5);
    let stage = |base: &[R], k: &[R], c: R| -> Vec<R> { base.iter().zip(k).map(|(&a, &b)| a + c * b).collect() };
    let k1 = sys.continuous_rhs(x, u)?.0;
    let k2 = sys.continuous_rhs(&stage(x, &k1, half * h), u)?.0;
    let k3 = sys.continuous_rhs(&stage(x, &k2, half * h), u)?.0;
    let k4 = sys.continuous_rhs(&stage(x, &k3, h), u)?.0;
    let sixth = h / R::lit(6.0);
    let mut next = x.to_vec();
    axpy(&mut next, sixth, &k1);
    axpy(&mut next, sixth + sixth, &k2);
    axpy(&mut next, sixth + sixth, &k3);
    axpy(&mut next, sixth, &k4);
    Ok(next)
}

/// Per-step balance residuals and their worst cases.
///
/// A step passes when `|energy_residual| ≤ 100 tol (1 + |H(x_k)|)` and
/// `entropy_production ≥ −100 tol (1 + |S(x_k)|)`, with `tol` the solver tolerance
/// recorded in the trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport<R> {
    pub steps: usize,
    pub energy_residuals: Vec<R>,
    pub entropy_productions: Vec<R>,
    pub max_abs_energy_residual: R,
    /// `max_k |energy_residual_k| / (1 + |H(x_k)|)`
    pub max_relative_energy_residual: R,
    pub min_entropy_production: R,
    /// `min_k entropy_production_k / (1 + |S(x_k)|)`
    pub min_relative_entropy_production: R,
    /// `H(x_N) − H(x_0) − Σ h yᵀu`
    pub cumulative_energy_balance: R,
    /// `Σ_k entropy_production_k`
    pub cumulative_entropy_production: R,
    pub threshold: R,
    pub energy_ok: bool,
    pub entropy_ok: bool,
}

impl<R: Real> BalanceReport<R> {
    pub fn passed(&self) -> bool {
        self.energy_ok && self.entropy_ok
    }
}

/// Multiple of the solver tolerance allowed in the per-step balances.
pub const BALANCE_TOLERANCE_FACTOR: f64 = 100.0;

pub fn balance_diagnostics<R: Real>(traj: &Trajectory<R>) -> Result<BalanceReport<R>> {
    if traj.steps.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let energy = traj.observable("H").ok_or(Error::EmptyTrajectory)?;
    let entropy = traj.observable("S").ok_or(Error::EmptyTrajectory)?;
    let threshold = R::lit(BALANCE_TOLERANCE_FACTOR) * traj.solver_tolerance;

    let mut max_abs = R::zero();
    let mut max_rel = R::zero();
    let mut min_prod = R::infinity();
    let mut min_rel = R::infinity();
    let mut supplied = R::zero();
    let mut produced = R::zero();
    for (k, rec) in traj.steps.iter().enumerate() {
        max_abs = max_abs.max(rec.energy_residual.abs());
        max_rel = max_rel.max(rec.energy_residual.abs() / (R::one() + energy[k].abs()));
        min_prod = min_prod.min(rec.entropy_production);
        min_rel = min_rel.min(rec.entropy_production / (R::one() + entropy[k].abs()));
        supplied += traj.step_size * dot(&rec.output, &rec.input);
        produced += rec.entropy_production;
    }
    let last = traj.steps.len();
    Ok(BalanceReport {
        steps: last,
        energy_residuals: traj.steps.iter().map(|r| r.energy_residual).collect(),
        entropy_productions: traj.steps.iter().map(|r| r.entropy_production).collect(),
        max_abs_energy_residual: max_abs,
        max_relative_energy_residual: max_rel,
        min_entropy_production: min_prod,
        min_relative_entropy_production: min_rel,
        cumulative_energy_balance: energy[last] - energy[0] - supplied,
        cumulative_entropy_production: produced,
        threshold,
        energy_ok: max_rel <= threshold,
        entropy_ok: min_rel >= -threshold,
    })
}
