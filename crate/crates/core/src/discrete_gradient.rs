//! Discrete gradients: two-point vector functions `∇̄f(x, x′)` with
//!
//! * `∇̄f(x, x′)ᵀ(x′ − x) = f(x′) − f(x)` (discrete chain rule), and
//! * `∇̄f(x, x) = ∇f(x)` (consistency).
//!
//! Three constructions are provided behind [`DiscreteGradientMethod`]: the
//! mean-value (averaged vector field) gradient, Gonzalez's midpoint gradient and
//! the Itoh–Abe coordinate-increment gradient.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{check_len, Result};
use crate::linalg::{dot, invalid, midpoint, norm, sub};
use crate::quadrature::GaussLegendre;
use crate::scalar::Real;

type ValueFn<R> = dyn Fn(&[R]) -> R + Send + Sync;
type GradientFn<R> = dyn Fn(&[R]) -> Vec<R> + Send + Sync;

/// A differentiable real function of the state with a closed-form gradient.
#[derive(Clone)]
pub struct ScalarField<R> {
    dimension: usize,
    value: Arc<ValueFn<R>>,
    gradient: Arc<GradientFn<R>>,
}

impl<R: Real> ScalarField<R> {
    pub fn new(
        dimension: usize,
        value: impl Fn(&[R]) -> R + Send + Sync + 'static,
        gradient: impl Fn(&[R]) -> Vec<R> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dimension,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    /// `f(x) = cᵀx`.
    pub fn linear(coefficients: Vec<R>) -> Self {
        let c = Arc::new(coefficients);
        let c2 = Arc::clone(&c);
        Self::new(c.len(), move |x| dot(&c, x), move |_| c2.as_ref().clone())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn value(&self, x: &[R]) -> R {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[R]) -> Vec<R> {
        (self.gradient)(x)
    }

    fn check(&self, x: &[R], x2: &[R]) -> Result<()> {
        check_len("discrete gradient first point", self.dimension, x.len())?;
        check_len("discrete gradient second point", self.dimension, x2.len())
    }
}

impl<R> fmt::Debug for ScalarField<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dimension", &self.dimension)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiscreteGradientKind {
    MeanValue,
    MidpointGonzalez,
    CoordinateIncrement,
}

impl DiscreteGradientKind {
    pub const ALL: [Self; 3] = [Self::MeanValue, Self::MidpointGonzalez, Self::CoordinateIncrement];

    pub fn name(self) -> &'static str {
        match self {
            Self::MeanValue => "mean_value",
            Self::MidpointGonzalez => "midpoint",
            Self::CoordinateIncrement => "coordinate_increment",
        }
    }
}

impl fmt::Display for DiscreteGradientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiscreteGradientKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mean_value" | "avf" => Ok(Self::MeanValue),
            "midpoint" | "midpoint_gonzalez" | "gonzalez" => Ok(Self::MidpointGonzalez),
            "coordinate_increment" | "itoh_abe" => Ok(Self::CoordinateIncrement),
            other => Err(format!(
                "unknown discrete gradient `{other}` (expected mean_value, midpoint or coordinate_increment)"
            )),
        }
    }
}

pub const DEFAULT_QUADRATURE_ORDER: usize = 5;
pub const DEFAULT_COINCIDENCE_THRESHOLD: f64 = 1e-10;

/// A configured discrete gradient rule.
///
/// The coincidence threshold `ε` selects the exact-gradient branch. For the midpoint
/// and mean-value rules the test is `|x′ − x| ≤ ε (1 + |x|)`; the coordinate-increment
/// rule applies `|x′ᵢ − xᵢ| ≤ ε` per component.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGradientMethod<R> {
    kind: DiscreteGradientKind,
    coincidence_threshold: R,
    rule: GaussLegendre<R>,
}

impl<R: Real> DiscreteGradientMethod<R> {
    pub fn new(kind: DiscreteGradientKind) -> Self {
        Self {
            kind,
            coincidence_threshold: R::lit(DEFAULT_COINCIDENCE_THRESHOLD),
            rule: GaussLegendre::new(DEFAULT_QUADRATURE_ORDER),
        }
    }

    pub fn midpoint() -> Self {
        Self::new(DiscreteGradientKind::MidpointGonzalez)
    }

    pub fn coordinate_increment() -> Self {
        Self::new(DiscreteGradientKind::CoordinateIncrement)
    }

    pub fn mean_value(order: usize) -> Result<Self> {
        Self::new(DiscreteGradientKind::MeanValue).with_quadrature_order(order)
    }

    pub fn with_quadrature_order(mut self, order: usize) -> Result<Self> {
        if order < 1 {
            return Err(invalid("quadrature_order", "must be at least 1"));
        }
        self.rule = GaussLegendre::new(order);
        Ok(self)
    }

    pub fn with_coincidence_threshold(mut self, eps: R) -> Result<Self> {
        if !(eps >= R::zero()) || !eps.is_finite() {
            return Err(invalid(
                "coincidence_threshold",
                format!("must be finite and >= 0, got {eps}"),
            ));
        }
        self.coincidence_threshold = eps;
        Ok(self)
    }

    pub fn kind(&self) -> DiscreteGradientKind {
        self.kind
    }

    pub fn quadrature_order(&self) -> usize {
        self.rule.order()
    }

    pub fn coincidence_threshold(&self) -> R {
        self.coincidence_threshold
    }

    /// `∇̄f(x, x2)`.
    pub fn evaluate(&self, f: &ScalarField<R>, x: &[R], x2: &[R]) -> Result<Vec<R>> {
        f.check(x, x2)?;
        let eps = self.coincidence_threshold;
        Ok(match self.kind {
            DiscreteGradientKind::MeanValue => mean_value_with_rule(f, x, x2, &self.rule, eps),
            DiscreteGradientKind::MidpointGonzalez => midpoint_unchecked(f, x, x2, eps),
            DiscreteGradientKind::CoordinateIncrement => coordinate_increment_unchecked(f, x, x2, eps),
        })
    }
}

impl<R: Real> Default for DiscreteGradientMethod<R> {
    fn default() -> Self {
        Self::midpoint()
    }
}

fn coincident<R: Real>(x: &[R], x2: &[R], eps: R) -> bool {
    let dx = sub(x2, x);
    !(norm(&dx) > eps * (R::one() + norm(x)))
}

/// Gonzalez midpoint discrete gradient.
pub fn midpoint_gradient<R: Real>(f: &ScalarField<R>, x: &[R], x2: &[R], eps: R) -> Result<Vec<R>> {
    f.check(x, x2)?;
    Ok(midpoint_unchecked(f, x, x2, eps))
}

fn midpoint_unchecked<R: Real>(f: &ScalarField<R>, x: &[R], x2: &[R], eps: R) -> Vec<R> {
    if coincident(x, x2, eps) {
        return f.gradient(x);
    }
    let dx = sub(x2, x);
    let mut grad = f.gradient(&midpoint(x, x2));
    let correction = (f.value(x2) - f.value(x) - dot(&grad, &dx)) / dot(&dx, &dx);
    for (g, d) in grad.iter_mut().zip(&dx) {
        *g += correction * *d;
    }
    grad
}

/// Mean-value discrete gradient `∫₀¹ ∇f((1−s)x + s x2) ds` by `order`-point
/// Gauss–Legendre quadrature. Returns `∇f(x)` when the two points are identical.
pub fn mean_value_gradient<R: Real>(f: &ScalarField<R>, x: &[R], x2: &[R], order: usize) -> Result<Vec<R>> {
    f.check(x, x2)?;
    if order < 1 {
        return Err(invalid("order", "quadrature order must be at least 1"));
    }
    Ok(mean_value_with_rule(f, x, x2, &GaussLegendre::new(order), R::zero()))
}

fn mean_value_with_rule<R: Real>(f: &ScalarField<R>, x: &[R], x2: &[R], rule: &GaussLegendre<R>, eps: R) -> Vec<R> {
    if coincident(x, x2, eps) {
        return f.gradient(x);
    }
    let mut acc = vec![R::zero(); x.len()];
    let mut point = vec![R::zero(); x.len()];
    for (&s, &w) in rule.nodes().iter().zip(rule.weights()) {
        for ((p, &a), &b) in point.iter_mut().zip(x).zip(x2) {
            *p = a + s * (b - a);
        }
        for (acc_i, g) in acc.iter_mut().zip(f.gradient(&point)) {
            *acc_i += w * g;
        }
    }
    acc
}

/// Itoh–Abe coordinate-increment discrete gradient in the natural index order.
pub fn coordinate_increment_gradient<R: Real>(f: &ScalarField<R>, x: &[R], x2: &[R], eps: R) -> Result<Vec<R>> {
    f.check(x, x2)?;
    Ok(coordinate_increment_unchecked(f, x, x2, eps))
}

fn coordinate_increment_unchecked<R: Real>(f: &ScalarField<R>, x: &[R], x2: &[R], eps: R) -> Vec<R> {
    let n = x.len();
    let mut grad = Vec::with_capacity(n);
    // `mixed` walks from x to x2 one coordinate at a time; reusing the previous
    // value keeps the sum telescoping in floating point too.
    let mut mixed = x.to_vec();
    let mut before = f.value(&mixed);
    for i in 0..n {
        let delta = x2[i] - x[i];
        if delta.abs() > eps {
            mixed[i] = x2[i];
            let after = f.value(&mixed);
            grad.push((after - before) / delta);
            before = after;
        } else {
            grad.push(f.gradient(&mixed)[i]);
            mixed[i] = x2[i];
            before = f.value(&mixed);
        }
    }
    grad
}

/// `|∇̄f(x, x2)ᵀ(x2 − x) − (f(x2) − f(x))|`
pub fn chain_rule_residual<R: Real>(
    method: &DiscreteGradientMethod<R>,
    f: &ScalarField<R>,
    x: &[R],
    x2: &[R],
) -> Result<R> {
    let grad = method.evaluate(f, x, x2)?;
    let dx = sub(x2, x);
    Ok((dot(&grad, &dx) - (f.value(x2) - f.value(x))).abs())
}

/// Central-difference gradient. Test oracle only; steppers always use the
/// closed-form gradient of a [`ScalarField`].
pub fn numeric_gradient<R: Real>(f: impl Fn(&[R]) -> R, x: &[R], step: R) -> Result<Vec<R>> {
    if !(step > R::zero()) {
        return Err(invalid("step", "finite-difference step must be positive"));
    }
    let mut probe = x.to_vec();
    let two_step = step + step;
    Ok((0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let forward = f(&probe);
            probe[i] = x[i] - step;
            let backward = f(&probe);
            probe[i] = x[i];
            (forward - backward) / two_step
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn half_square(n: usize) -> ScalarField<f64> {
        ScalarField::new(n, |x: &[f64]| 0.5 * dot(x, x), |x: &[f64]| x.to_vec())
    }

    fn power(k: i32) -> ScalarField<f64> {
        ScalarField::new(
            1,
            move |x: &[f64]| x[0].powi(k),
            move |x: &[f64]| vec![k as f64 * x[0].powi(k - 1)],
        )
    }

    fn product() -> ScalarField<f64> {
        ScalarField::new(2, |x: &[f64]| x[0] * x[1], |x: &[f64]| vec![x[1], x[0]])
    }

    const EPS: f64 = DEFAULT_COINCIDENCE_THRESHOLD;

    #[test]
    fn midpoint_quadratic_is_midpoint_gradient() {
        let g = midpoint_gradient(&half_square(2), &[0.0, 0.0], &[2.0, 4.0], EPS).unwrap();
        assert_eq!(g, vec![1.0, 2.0]);
    }

    #[test]
    fn midpoint_coincident_returns_gradient() {
        let g = midpoint_gradient(&half_square(2), &[3.0, 1.0], &[3.0, 1.0], EPS).unwrap();
        assert_eq!(g, vec![3.0, 1.0]);
    }

    #[test]
    fn midpoint_one_dimensional_secant() {
        let g = midpoint_gradient(&power(4), &[1.0], &[2.0], EPS).unwrap();
        assert!((g[0] - 15.0).abs() < 1e-12);
    }

    #[test]
    fn mean_value_examples() {
        let g = mean_value_gradient(&half_square(2), &[0.0, 0.0], &[2.0, 4.0], 2).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-15 && (g[1] - 2.0).abs() < 1e-15);
        // ∫₀¹ 3s² ds = 1
        let g = mean_value_gradient(&power(3), &[0.0], &[1.0], 2).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-15);
        let f = power(5);
        assert_eq!(mean_value_gradient(&f, &[0.7], &[0.7], 3).unwrap(), f.gradient(&[0.7]));
    }

    #[test]
    fn mean_value_rejects_zero_order() {
        assert!(matches!(
            mean_value_gradient(&power(2), &[0.0], &[1.0], 0),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(DiscreteGradientMethod::<f64>::mean_value(0).is_err());
    }

    #[test]
    fn coordinate_increment_examples() {
        let f = product();
        assert_eq!(
            coordinate_increment_gradient(&f, &[0.0, 0.0], &[1.0, 1.0], EPS).unwrap(),
            vec![0.0, 1.0]
        );
        // first component falls back to ∂f/∂x₁ = x₂ = 2
        assert_eq!(
            coordinate_increment_gradient(&f, &[1.0, 2.0], &[1.0, 3.0], EPS).unwrap(),
            vec![2.0, 1.0]
        );
        let g = coordinate_increment_gradient(&power(2), &[1.0], &[3.0], EPS).unwrap();
        assert_eq!(g, vec![4.0]);
    }

    #[test]
    fn coordinate_increment_all_components_coincident() {
        let f = product();
        let g = coordinate_increment_gradient(&f, &[1.5, -2.0], &[1.5, -2.0], EPS).unwrap();
        assert_eq!(g, f.gradient(&[1.5, -2.0]));
    }

    #[test]
    fn chain_rule_residual_examples() {
        let mid = DiscreteGradientMethod::midpoint();
        assert!(chain_rule_residual(&mid, &power(4), &[1.0], &[2.0]).unwrap() <= 1e-12);
        let ci = DiscreteGradientMethod::coordinate_increment();
        assert!(chain_rule_residual(&ci, &product(), &[0.0, 0.0], &[1.0, 1.0]).unwrap() <= 1e-12);
        // one-point rule evaluates 4s³ at s = ½: 0.5 instead of 1
        let mv = DiscreteGradientMethod::mean_value(1).unwrap();
        let r = chain_rule_residual(&mv, &power(4), &[0.0], &[1.0]).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = half_square(2);
        let err = midpoint_gradient(&f, &[0.0], &[1.0, 2.0], EPS).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                found: 1,
                ..
            }
        ));
        assert!(DiscreteGradientMethod::coordinate_increment()
            .evaluate(&f, &[0.0, 0.0], &[1.0])
            .is_err());
    }

    #[test]
    fn numeric_gradient_examples() {
        let g = numeric_gradient(|x: &[f64]| 0.5 * dot(x, x), &[1.0, 2.0], 1e-5).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-8 && (g[1] - 2.0).abs() < 1e-8);
        let g = numeric_gradient(|_: &[f64]| 3.0, &[1.0, -4.0, 2.0], 1e-3).unwrap();
        assert_eq!(g, vec![0.0; 3]);
        // truncation error step²·f‴/6 = 1e-8
        let g = numeric_gradient(|x: &[f64]| x[0].powi(3), &[1.0], 1e-4).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-7);
        assert!(numeric_gradient(|x: &[f64]| x[0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("midpoint".parse(), Ok(DiscreteGradientKind::MidpointGonzalez));
        assert_eq!("itoh_abe".parse(), Ok(DiscreteGradientKind::CoordinateIncrement));
        assert_eq!("mean_value".parse(), Ok(DiscreteGradientKind::MeanValue));
        assert!("rk4".parse::<DiscreteGradientKind>().is_err());
        for kind in DiscreteGradientKind::ALL {
            assert_eq!(kind.name().parse(), Ok(kind));
        }
    }

    #[test]
    fn one_dimensional_methods_agree_with_secant() {
        let f = ScalarField::new(
            1,
            |x: &[f64]| x[0].sin() + x[0].powi(3),
            |x: &[f64]| vec![x[0].cos() + 3.0 * x[0] * x[0]],
        );
        let (a, b) = (0.3, 1.1);
        let secant = (f.value(&[b]) - f.value(&[a])) / (b - a);
        for method in [
            DiscreteGradientMethod::midpoint(),
            DiscreteGradientMethod::coordinate_increment(),
            DiscreteGradientMethod::mean_value(12).unwrap(),
        ] {
            let g = method.evaluate(&f, &[a], &[b]).unwrap();
            assert!((g[0] - secant).abs() < 1e-12, "{:?}", method.kind());
        }
    }

    #[test]
    fn continuity_across_threshold() {
        let f = ScalarField::new(
            2,
            |x: &[f64]| x[0].exp() * x[1] + x[1].powi(4),
            |x: &[f64]| vec![x[0].exp() * x[1], x[0].exp() + 4.0 * x[1].powi(3)],
        );
        let x = [0.2, -0.4];
        let d = [0.6, 0.8];
        let exact = f.gradient(&x);
        for method in [
            DiscreteGradientMethod::midpoint(),
            DiscreteGradientMethod::coordinate_increment(),
        ] {
            for k in 4..14 {
                let delta = 10f64.powi(-k);
                let x2 = [x[0] + delta * d[0], x[1] + delta * d[1]];
                let g = method.evaluate(&f, &x, &x2).unwrap();
                let jump = norm(&sub(&g, &exact));
                // roundoff in the correction grows like ulp/δ below ~1e-8
                let bound = 10.0 * delta + 1e-15 / delta;
                assert!(jump <= bound, "{:?} δ={delta:e} jump={jump:e}", method.kind());
            }
        }
    }
}
