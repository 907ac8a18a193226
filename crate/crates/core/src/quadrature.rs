//! Gauss–Legendre rules on `[0, 1]`.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre<R> {
    nodes: Vec<R>,
    weights: Vec<R>,
}

impl<R: Real> GaussLegendre<R> {
    /// `order`-point rule, exact for polynomials of degree `2 * order - 1`.
    ///
    /// Nodes are found in `f64` by Newton iteration on the Legendre polynomial and
    /// then cast to `R`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be at least 1");
        let n = order;
        let mut nodes = vec![R::zero(); n];
        let mut weights = vec![R::zero(); n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] to [0, 1]
            nodes[i] = R::lit(0.5 * (1.0 - x));
            nodes[n - 1 - i] = R::lit(0.5 * (1.0 + x));
            weights[i] = R::lit(0.5 * w);
            weights[n - 1 - i] = R::lit(0.5 * w);
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[R] {
        &self.nodes
    }

    pub fn weights(&self) -> &[R] {
        &self.weights
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_rule_is_midpoint() {
        let rule = GaussLegendre::<f64>::new(1);
        assert_eq!(rule.nodes(), &[0.5]);
        assert_eq!(rule.weights(), &[1.0]);
    }

    #[test]
    fn exact_up_to_degree_2n_minus_1() {
        for order in 1..=8 {
            let rule = GaussLegendre::<f64>::new(order);
            let total: f64 = rule.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-14, "order {order}");
            for degree in 0..2 * order {
                let approx: f64 = rule
                    .nodes()
                    .iter()
                    .zip(rule.weights())
                    .map(|(s, w)| w * s.powi(degree as i32))
                    .sum();
                let exact = 1.0 / (degree as f64 + 1.0);
                assert!((approx - exact).abs() < 1e-14, "order {order} degree {degree}");
            }
        }
    }

    #[test]
    fn nodes_sorted_inside_unit_interval() {
        let rule = GaussLegendre::<f64>::new(5);
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(rule.nodes().iter().all(|&s| s > 0.0 && s < 1.0));
    }
}
