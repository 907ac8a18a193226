//! Irreversible port-Hamiltonian system model.
//!
//! The dynamics are
//!
//! ```text
//! dx/dt = Σᵢ γᵢ(x) {S,H}_{Jᵢ} Jᵢ ∇H + Σ_α M_α ∇H
//!       + Σⱼ γ_port,j(x,u) {S_tot,H_tot}_{gⱼ} gⱼ u + Σ_β g_Sβ u
//! y     = Σⱼ γ_port,j(x,u) {S_tot,H_tot}_{gⱼ} gⱼᵀ ∇H + Σ_β g_Sβᵀ ∇H
//! ```
//!
//! with `{S,H}_J = ∇Sᵀ J ∇H` and `{S_tot,H_tot}_g = (gᵀ∇S)ᵀu − τᵀ(gᵀ∇H)`.
//! All structure and port matrices are constant. The same assembly serves the
//! continuous vector field (exact gradients, γ at `x`) and the discrete scheme
//! (discrete gradients, γ at the step midpoint).

use std::fmt;
use std::sync::Arc;

use crate::discrete_gradient::ScalarField;
use crate::error::{check_len, Error, Result};
use crate::linalg::{axpy, dot, invalid, Matrix};
use crate::scalar::Real;

type StateFn<R> = dyn Fn(&[R]) -> R + Send + Sync;
type PortFn<R> = dyn Fn(&[R], &[R]) -> R + Send + Sync;
type GuardFn<R> = dyn Fn(&[R]) -> bool + Send + Sync;

/// Constant skew-symmetric structure matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix<R> {
    matrix: Matrix<R>,
}

/// Absolute tolerance on `|a_ij + a_ji|` accepted by [`SkewMatrix::new`].
pub const SKEW_TOLERANCE: f64 = 1e-14;

impl<R: Real> SkewMatrix<R> {
    pub fn new(matrix: Matrix<R>) -> Result<Self> {
        check_len("skew matrix columns", matrix.rows(), matrix.cols())?;
        let defect = matrix.skew_defect();
        if !(defect <= R::lit(SKEW_TOLERANCE)) {
            return Err(Error::NotSkew { worst: defect.as_f64() });
        }
        Ok(Self { matrix })
    }

    pub fn from_rows(rows: &[Vec<R>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Skips the skew check. Only meant for exercising [`IphsSystem::validate_structure`].
    pub fn new_unchecked(matrix: Matrix<R>) -> Self {
        Self { matrix }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            matrix: Matrix::zeros(n, n),
        }
    }

    pub fn dimension(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix<R> {
        &self.matrix
    }

    pub fn mul_vec(&self, v: &[R]) -> Vec<R> {
        self.matrix.mul_vec(v)
    }
}

/// `γ(x) {S,H}_J J ∇H`
#[derive(Clone)]
pub struct DissipationTerm<R> {
    pub structure: SkewMatrix<R>,
    pub gamma: Arc<StateFn<R>>,
}

impl<R: Real> DissipationTerm<R> {
    pub fn new(structure: SkewMatrix<R>, gamma: impl Fn(&[R]) -> R + Send + Sync + 'static) -> Self {
        Self {
            structure,
            gamma: Arc::new(gamma),
        }
    }
}

/// `M ∇H`, with `S` a Casimir of `M`.
#[derive(Debug, Clone)]
pub struct ReversibleInternalTerm<R> {
    pub structure: SkewMatrix<R>,
}

/// Irreversible port `(g, γ_port, τ)`.
#[derive(Clone)]
pub struct IrreversiblePort<R> {
    pub g: Matrix<R>,
    pub gamma: Arc<PortFn<R>>,
    pub tau: Vec<R>,
}

impl<R: Real> IrreversiblePort<R> {
    pub fn new(g: Matrix<R>, tau: Vec<R>, gamma: impl Fn(&[R], &[R]) -> R + Send + Sync + 'static) -> Self {
        Self {
            g,
            gamma: Arc::new(gamma),
            tau,
        }
    }
}

/// Reversible port `g_S`; requires `∇Sᵀ g_S = 0` and `τ = 0`.
#[derive(Debug, Clone)]
pub struct ReversiblePort<R> {
    pub g: Matrix<R>,
    pub tau: Vec<R>,
}

impl<R: Real> ReversiblePort<R> {
    pub fn new(g: Matrix<R>) -> Self {
        let m = g.cols();
        Self {
            g,
            tau: vec![R::zero(); m],
        }
    }
}

/// `gSᵀ J gH`: the (discrete) almost-Poisson bracket given the two gradients.
pub fn discrete_bracket<R: Real>(structure: &SkewMatrix<R>, grad_s: &[R], grad_h: &[R]) -> Result<R> {
    let n = structure.dimension();
    check_len("bracket entropy gradient", n, grad_s.len())?;
    check_len("bracket energy gradient", n, grad_h.len())?;
    Ok(dot(grad_s, &structure.mul_vec(grad_h)))
}

/// `(gᵀ gS)ᵀ u − τᵀ (gᵀ gH)`: the port bracket `{S_tot, H_tot}` with the extension
/// coordinate eliminated.
pub fn discrete_port_bracket<R: Real>(g: &Matrix<R>, grad_s: &[R], grad_h: &[R], u: &[R], tau: &[R]) -> Result<R> {
    check_len("port bracket entropy gradient", g.rows(), grad_s.len())?;
    check_len("port bracket energy gradient", g.rows(), grad_h.len())?;
    check_len("port bracket input", g.cols(), u.len())?;
    check_len("port bracket tau", g.cols(), tau.len())?;
    Ok(port_bracket_unchecked(g, grad_s, grad_h, u, tau))
}

fn port_bracket_unchecked<R: Real>(g: &Matrix<R>, grad_s: &[R], grad_h: &[R], u: &[R], tau: &[R]) -> R {
    dot(&g.tr_mul_vec(grad_s), u) - dot(tau, &g.tr_mul_vec(grad_h))
}

/// Everything the right-hand side produces at one evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembled<R> {
    /// State velocity (continuous) or `(x′ − x)/h` (discrete).
    pub drift: Vec<R>,
    pub output: Vec<R>,
    /// `Σ_ports y_portᵀ τ_port`.
    pub entropy_flux: R,
    /// `Σᵢ γᵢ {S,H}² + Σⱼ γ_port,j {S_tot,H_tot}²`.
    pub entropy_source: R,
}

#[derive(Clone)]
pub struct IphsSystem<R> {
    state_dim: usize,
    input_dim: usize,
    hamiltonian: ScalarField<R>,
    entropy: ScalarField<R>,
    entropy_is_linear: bool,
    dissipation: Vec<DissipationTerm<R>>,
    reversible_internal: Vec<ReversibleInternalTerm<R>>,
    irreversible_ports: Vec<IrreversiblePort<R>>,
    reversible_ports: Vec<ReversiblePort<R>>,
    domain_guard: Arc<GuardFn<R>>,
}

impl<R> fmt::Debug for IphsSystem<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IphsSystem")
            .field("state_dim", &self.state_dim)
            .field("input_dim", &self.input_dim)
            .field("entropy_is_linear", &self.entropy_is_linear)
            .field("dissipation", &self.dissipation.len())
            .field("reversible_internal", &self.reversible_internal.len())
            .field("irreversible_ports", &self.irreversible_ports.len())
            .field("reversible_ports", &self.reversible_ports.len())
            .finish()
    }
}

/// Builder for [`IphsSystem`]; dimensions are checked in [`IphsSystemBuilder::build`].
pub struct IphsSystemBuilder<R> {
    system: IphsSystem<R>,
}

impl<R: Real> IphsSystemBuilder<R> {
    pub fn dissipation(mut self, term: DissipationTerm<R>) -> Self {
        self.system.dissipation.push(term);
        self
    }

    pub fn reversible(mut self, structure: SkewMatrix<R>) -> Self {
        self.system
            .reversible_internal
            .push(ReversibleInternalTerm { structure });
        self
    }

    pub fn irreversible_port(mut self, port: IrreversiblePort<R>) -> Self {
        self.system.irreversible_ports.push(port);
        self
    }

    pub fn reversible_port(mut self, port: ReversiblePort<R>) -> Self {
        self.system.reversible_ports.push(port);
        self
    }

    /// Declares `S` linear, so `∇̄S(x, x′) = ∇S(x)` in the discrete scheme.
    pub fn linear_entropy(mut self, linear: bool) -> Self {
        self.system.entropy_is_linear = linear;
        self
    }

    pub fn domain_guard(mut self, guard: impl Fn(&[R]) -> bool + Send + Sync + 'static) -> Self {
        self.system.domain_guard = Arc::new(guard);
        self
    }

    pub fn build(self) -> Result<IphsSystem<R>> {
        let sys = self.system;
        let (n, m) = (sys.state_dim, sys.input_dim);
        check_len("hamiltonian dimension", n, sys.hamiltonian.dimension())?;
        check_len("entropy dimension", n, sys.entropy.dimension())?;
        for term in &sys.dissipation {
            check_len("dissipation structure", n, term.structure.dimension())?;
        }
        for term in &sys.reversible_internal {
            check_len("reversible structure", n, term.structure.dimension())?;
        }
        for port in &sys.irreversible_ports {
            check_len("irreversible port rows", n, port.g.rows())?;
            check_len("irreversible port columns", m, port.g.cols())?;
            check_len("irreversible port tau", m, port.tau.len())?;
        }
        for port in &sys.reversible_ports {
            check_len("reversible port rows", n, port.g.rows())?;
            check_len("reversible port columns", m, port.g.cols())?;
            check_len("reversible port tau", m, port.tau.len())?;
        }
        if sys.entropy_is_linear {
            let probes = linearity_probes::<R>(n);
            let reference = sys.entropy.gradient(&probes[0]);
            for probe in &probes[1..] {
                let g = sys.entropy.gradient(probe);
                if g != reference {
                    return Err(invalid("entropy", "declared linear but its gradient varies"));
                }
            }
        }
        Ok(sys)
    }
}

fn linearity_probes<R: Real>(n: usize) -> [Vec<R>; 3] {
    let probe = |a: f64, b: f64| (0..n).map(|i| R::lit(a + b * i as f64)).collect::<Vec<_>>();
    [probe(0.5, 0.25), probe(1.7, -0.3), probe(3.1, 0.7)]
}

impl<R: Real> IphsSystem<R> {
    pub fn builder(
        state_dim: usize,
        input_dim: usize,
        hamiltonian: ScalarField<R>,
        entropy: ScalarField<R>,
    ) -> IphsSystemBuilder<R> {
        IphsSystemBuilder {
            system: Self {
                state_dim,
                input_dim,
                hamiltonian,
                entropy,
                entropy_is_linear: false,
                dissipation: Vec::new(),
                reversible_internal: Vec::new(),
                irreversible_ports: Vec::new(),
                reversible_ports: Vec::new(),
                domain_guard: Arc::new(|_: &[R]| true),
            },
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hamiltonian(&self) -> &ScalarField<R> {
        &self.hamiltonian
    }

    pub fn entropy(&self) -> &ScalarField<R> {
        &self.entropy
    }

    pub fn entropy_is_linear(&self) -> bool {
        self.entropy_is_linear
    }

    pub fn dissipation(&self) -> &[DissipationTerm<R>] {
        &self.dissipation
    }

    pub fn reversible_internal(&self) -> &[ReversibleInternalTerm<R>] {
        &self.reversible_internal
    }

    pub fn irreversible_ports(&self) -> &[IrreversiblePort<R>] {
        &self.irreversible_ports
    }

    pub fn reversible_ports(&self) -> &[ReversiblePort<R>] {
        &self.reversible_ports
    }

    pub fn in_domain(&self, x: &[R]) -> bool {
        x.len() == self.state_dim && x.iter().all(|v| v.is_finite()) && (self.domain_guard)(x)
    }

    pub(crate) fn check_state(&self, x: &[R]) -> Result<()> {
        check_len("state", self.state_dim, x.len())?;
        if self.in_domain(x) {
            Ok(())
        } else {
            Err(Error::DomainViolation(format!("{x:?}")))
        }
    }

    pub(crate) fn check_input(&self, u: &[R]) -> Result<()> {
        check_len("input", self.input_dim, u.len())
    }

    /// Evaluates every term of the right-hand side with the given gradients;
    /// γ functions are evaluated at `gamma_at`.
    pub fn assemble(&self, gamma_at: &[R], grad_s: &[R], grad_h: &[R], u: &[R]) -> Assembled<R> {
        let n = self.state_dim;
        let mut drift = vec![R::zero(); n];
        let mut output = vec![R::zero(); self.input_dim];
        let mut entropy_flux = R::zero();
        let mut entropy_source = R::zero();

        for term in &self.dissipation {
            let j_grad_h = term.structure.mul_vec(grad_h);
            let bracket = dot(grad_s, &j_grad_h);
            let gamma = (term.gamma)(gamma_at);
            axpy(&mut drift, gamma * bracket, &j_grad_h);
            entropy_source += gamma * bracket * bracket;
        }
        for term in &self.reversible_internal {
            let m_grad_h = term.structure.mul_vec(grad_h);
            for (d, v) in drift.iter_mut().zip(m_grad_h) {
                *d += v;
            }
        }
        for port in &self.irreversible_ports {
            let gt_grad_h = port.g.tr_mul_vec(grad_h);
            let bracket = dot(&port.g.tr_mul_vec(grad_s), u) - dot(&port.tau, &gt_grad_h);
            let gamma = (port.gamma)(gamma_at, u);
            let weight = gamma * bracket;
            axpy(&mut drift, weight, &port.g.mul_vec(u));
            axpy(&mut output, weight, &gt_grad_h);
            entropy_flux += weight * dot(&port.tau, &gt_grad_h);
            entropy_source += weight * bracket;
        }
        for port in &self.reversible_ports {
            let gt_grad_h = port.g.tr_mul_vec(grad_h);
            for (d, v) in drift.iter_mut().zip(port.g.mul_vec(u)) {
                *d += v;
            }
            for (o, &v) in output.iter_mut().zip(&gt_grad_h) {
                *o += v;
            }
            entropy_flux += dot(&port.tau, &gt_grad_h);
        }
        Assembled {
            drift,
            output,
            entropy_flux,
            entropy_source,
        }
    }

    /// Continuous vector field and output `(dx/dt, y)` at `(x, u)`.
    ///
    /// Returns `y` itself; the defining relation carries `−y` on its left side.
    pub fn continuous_rhs(&self, x: &[R], u: &[R]) -> Result<(Vec<R>, Vec<R>)> {
        let a = self.continuous_terms(x, u)?;
        Ok((a.drift, a.output))
    }

    /// [`Self::continuous_rhs`] together with the entropy flux and source.
    pub fn continuous_terms(&self, x: &[R], u: &[R]) -> Result<Assembled<R>> {
        self.check_state(x)?;
        self.check_input(u)?;
        let grad_h = self.hamiltonian.gradient(x);
        let grad_s = self.entropy.gradient(x);
        Ok(self.assemble(x, &grad_s, &grad_h, u))
    }

    /// Checks the structural conditions at the sampled states and inputs.
    ///
    /// Port γ functions are probed at every (state, input) pair; the entropy
    /// Casimir and reversible-port conditions at every state.
    pub fn validate_structure(&self, states: &[Vec<R>], inputs: &[Vec<R>]) -> ValidationReport {
        let mut report = ValidationReport::default();
        let zero = R::zero();
        let tol = R::lit(SKEW_TOLERANCE);

        for (i, term) in self.dissipation.iter().enumerate() {
            let d = term.structure.matrix().skew_defect();
            report.push(format!("dissipation[{i}] skew-symmetric"), d <= tol, d);
        }
        for (a, term) in self.reversible_internal.iter().enumerate() {
            let d = term.structure.matrix().skew_defect();
            report.push(format!("reversible[{a}] skew-symmetric"), d <= tol, d);
        }

        let mut domain_ok = true;
        for x in states {
            domain_ok &= self.in_domain(x);
        }
        report.push(
            "samples inside domain".to_string(),
            domain_ok,
            if domain_ok { zero } else { R::one() },
        );
        let states: Vec<&Vec<R>> = states.iter().filter(|x| self.in_domain(x)).collect();
        let inputs: Vec<&Vec<R>> = inputs.iter().filter(|u| u.len() == self.input_dim).collect();

        for (a, term) in self.reversible_internal.iter().enumerate() {
            let mut worst = zero;
            for x in &states {
                let row = term.structure.matrix().tr_mul_vec(&self.entropy.gradient(x));
                worst = worst.max(max_abs(&row));
            }
            report.push(format!("entropy is a Casimir of reversible[{a}]"), worst <= tol, worst);
        }
        for (b, port) in self.reversible_ports.iter().enumerate() {
            let mut worst = zero;
            for x in &states {
                worst = worst.max(max_abs(&port.g.tr_mul_vec(&self.entropy.gradient(x))));
            }
            report.push(format!("reversible_port[{b}] has ∇Sᵀg_S = 0"), worst <= tol, worst);
            let t = max_abs(&port.tau);
            report.push(format!("reversible_port[{b}] has tau = 0"), t == zero, t);
        }
        for (i, term) in self.dissipation.iter().enumerate() {
            let mut lowest = R::infinity();
            for x in &states {
                lowest = lowest.min((term.gamma)(x));
            }
            let ok = states.is_empty() || lowest > zero;
            report.push(format!("dissipation[{i}] gamma > 0"), ok, lowest.min(zero).abs());
        }
        for (j, port) in self.irreversible_ports.iter().enumerate() {
            let mut lowest = R::infinity();
            for x in &states {
                for u in &inputs {
                    lowest = lowest.min((port.gamma)(x, u));
                }
            }
            let probed = !states.is_empty() && !inputs.is_empty();
            let ok = !probed || lowest > zero;
            report.push(format!("irreversible_port[{j}] gamma > 0"), ok, lowest.min(zero).abs());
        }
        if self.entropy_is_linear && !states.is_empty() {
            let reference = self.entropy.gradient(states[0]);
            let mut worst = zero;
            for x in &states[1..] {
                let g = self.entropy.gradient(x);
                for (a, b) in g.iter().zip(&reference) {
                    worst = worst.max((*a - *b).abs());
                }
            }
            report.push("entropy gradient constant".to_string(), worst == zero, worst);
        }
        report
    }
}

fn max_abs<R: Real>(v: &[R]) -> R {
    v.iter().fold(R::zero(), |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    /// Size of the worst violation seen (0 when none).
    pub worst: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    fn push<R: Real>(&mut self, name: String, passed: bool, worst: R) {
        self.checks.push(ValidationCheck {
            name,
            passed,
            worst: worst.as_f64(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidationCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<48} worst {:.3e}",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.worst
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(n: usize) -> ScalarField<f64> {
        ScalarField::new(n, |x: &[f64]| 0.5 * dot(x, x), |x: &[f64]| x.to_vec())
    }

    fn rotation() -> SkewMatrix<f64> {
        SkewMatrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap()
    }

    #[test]
    fn skew_matrix_rejects_symmetric_part() {
        let err = SkewMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::NotSkew { .. }));
        assert!(SkewMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![-1.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn bracket_examples() {
        assert_eq!(discrete_bracket(&rotation(), &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(discrete_bracket(&rotation(), &[0.3, -2.0], &[0.3, -2.0]).unwrap(), 0.0);
        assert_eq!(
            discrete_bracket(&SkewMatrix::zeros(2), &[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            0.0
        );
        assert!(discrete_bracket(&rotation(), &[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn port_bracket_examples() {
        let mut g = Matrix::zeros(4, 2);
        g.set(0, 0, 1.0);
        let (t_bar, u1) = (3.5, 10.0);
        let b = discrete_port_bracket(
            &g,
            &[1.0, 0.0, 0.0, 0.0],
            &[t_bar, -2.0, 10.0, 0.4],
            &[u1, -10.0],
            &[1.0, 0.0],
        )
        .unwrap();
        assert_eq!(b, u1 - t_bar);

        let mut gs = Matrix::zeros(4, 2);
        gs.set(3, 1, 1.0);
        let b = discrete_port_bracket(
            &gs,
            &[1.0, 0.0, 0.0, 0.0],
            &[1.0, 2.0, 3.0, 4.0],
            &[5.0, 6.0],
            &[0.0, 0.0],
        )
        .unwrap();
        assert_eq!(b, 0.0);
        let b = discrete_port_bracket(
            &g,
            &[1.0, 0.0, 0.0, 0.0],
            &[1.0, 2.0, 3.0, 4.0],
            &[0.0, 0.0],
            &[0.0, 0.0],
        )
        .unwrap();
        assert_eq!(b, 0.0);
        assert!(discrete_port_bracket(&g, &[1.0; 4], &[1.0; 4], &[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn closed_conservative_rhs() {
        let sys = IphsSystem::builder(2, 0, quadratic(2), ScalarField::linear(vec![0.0, 0.0]))
            .reversible(rotation())
            .linear_entropy(true)
            .build()
            .unwrap();
        let (dx, y) = sys.continuous_rhs(&[1.0, 2.0], &[]).unwrap();
        assert_eq!(dx, vec![2.0, -1.0]);
        assert!(y.is_empty());
    }

    #[test]
    fn builder_checks_dimensions() {
        let err = IphsSystem::builder(3, 0, quadratic(2), ScalarField::linear(vec![0.0; 3])).build();
        assert!(err.is_err());
        let err = IphsSystem::builder(2, 1, quadratic(2), ScalarField::linear(vec![1.0, 0.0]))
            .reversible_port(ReversiblePort::new(Matrix::zeros(2, 2)))
            .build();
        assert!(err.is_err());
    }

    #[test]
    fn builder_rejects_false_linearity_claim() {
        let err = IphsSystem::builder(2, 0, quadratic(2), quadratic(2))
            .linear_entropy(true)
            .build();
        assert!(matches!(err, Err(Error::InvalidParameter { name: "entropy", .. })));
    }

    #[test]
    fn domain_guard_is_enforced() {
        let sys = IphsSystem::builder(2, 0, quadratic(2), ScalarField::linear(vec![1.0, 0.0]))
            .domain_guard(|x: &[f64]| x[1] > 0.0)
            .build()
            .unwrap();
        assert!(matches!(
            sys.continuous_rhs(&[0.0, -1.0], &[]),
            Err(Error::DomainViolation(_))
        ));
        assert!(sys.continuous_rhs(&[0.0, 1.0], &[]).is_ok());
    }
}
