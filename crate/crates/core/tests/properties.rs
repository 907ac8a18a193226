mod common;

use common::{random_iphs, Polynomial};
use iphs::gas_piston::{self, GasPistonParams};
use iphs::linalg::{dot, Matrix};
use iphs::{
    chain_rule_residual, discrete_bracket, step_iphs, DiscreteGradientKind, DiscreteGradientMethod, SkewMatrix,
    SolverConfig,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn method(kind: DiscreteGradientKind) -> DiscreteGradientMethod<f64> {
    DiscreteGradientMethod::new(kind)
}

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, dim)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn chain_rule_holds(seed in any::<u64>(), dim in 1usize..=5, kind_ix in 0usize..3) {
        let mut rng = StdRng::seed_from_u64(seed);
        let f = Polynomial::random(&mut rng, dim, 4, 6).field();
        let x = common::uniform_vec(&mut rng, dim, -2.0, 2.0);
        let x2 = common::uniform_vec(&mut rng, dim, -2.0, 2.0);
        let m = method(DiscreteGradientKind::ALL[kind_ix]);
        let scale = 1.0 + f.value(&x).abs() + f.value(&x2).abs();
        prop_assert!(chain_rule_residual(&m, &f, &x, &x2).unwrap() <= 1e-10 * scale);
    }

    #[test]
    fn symmetric_methods_ignore_argument_order(seed in any::<u64>(), dim in 1usize..=4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let f = Polynomial::random(&mut rng, dim, 4, 5).field();
        let x = common::uniform_vec(&mut rng, dim, -2.0, 2.0);
        let x2 = common::uniform_vec(&mut rng, dim, -2.0, 2.0);
        for kind in [DiscreteGradientKind::MidpointGonzalez, DiscreteGradientKind::MeanValue] {
            let m = method(kind);
            let a = m.evaluate(&f, &x, &x2).unwrap();
            let b = m.evaluate(&f, &x2, &x).unwrap();
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()));
            }
        }
    }

    #[test]
    fn bracket_is_antisymmetric(entries in prop::collection::vec(-3.0..3.0f64, 9), a in point(3), b in point(3)) {
        let mut m = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in (i + 1)..3 {
                m.set(i, j, entries[3 * i + j]);
                m.set(j, i, -entries[3 * i + j]);
            }
        }
        let j = SkewMatrix::new(m).unwrap();
        prop_assert!(discrete_bracket(&j, &a, &a).unwrap().abs() <= 1e-12);
        let ab = discrete_bracket(&j, &a, &b).unwrap();
        let ba = discrete_bracket(&j, &b, &a).unwrap();
        prop_assert!((ab + ba).abs() <= 1e-12 * (1.0 + ab.abs()));
    }

    #[test]
    fn ideal_gas_law(s in -3.0..3.0f64, v in 0.05..20.0f64) {
        let params = GasPistonParams::default();
        let t = gas_piston::temperature(s, v, &params).unwrap();
        let p = gas_piston::pressure(s, v, &params).unwrap();
        prop_assert!((p * v - params.n0 * params.r * t).abs() <= 1e-12 * (1.0 + t.abs()));
    }

    #[test]
    fn continuous_power_and_entropy_balance(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let rs = random_iphs(&mut rng);
        let terms = rs.system.continuous_terms(&rs.x0, &rs.u).unwrap();
        let grad_h = rs.system.hamiltonian().gradient(&rs.x0);
        let grad_s = rs.system.entropy().gradient(&rs.x0);
        let power = dot(&grad_h, &terms.drift);
        let supplied = dot(&terms.output, &rs.u);
        prop_assert!((power - supplied).abs() <= 1e-10 * (1.0 + power.abs()));
        let production = dot(&grad_s, &terms.drift) - terms.entropy_flux;
        prop_assert!(terms.entropy_source >= 0.0);
        prop_assert!((production - terms.entropy_source).abs() <= 1e-10 * (1.0 + production.abs()));
    }

    #[test]
    fn discrete_step_balances(seed in any::<u64>(), h in 0.005..0.1f64) {
        let mut rng = StdRng::seed_from_u64(seed);
        let rs = random_iphs(&mut rng);
        let cfg = SolverConfig::default();
        let step = step_iphs(&rs.system, &DiscreteGradientMethod::midpoint(), &rs.x0, &rs.u, h, &cfg).unwrap();
        let bound = 100.0 * cfg.tolerance;
        prop_assert!(step.energy_residual.abs() <= bound * (1.0 + rs.system.hamiltonian().value(&rs.x0).abs()));
        prop_assert!(step.entropy_production >= -bound * (1.0 + rs.system.entropy().value(&rs.x0).abs()));
    }

    #[test]
    fn validation_accepts_random_systems(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let rs = random_iphs(&mut rng);
        let report = rs.system.validate_structure(std::slice::from_ref(&rs.x0), std::slice::from_ref(&rs.u));
        prop_assert!(report.passed(), "{}", report);
    }
}
