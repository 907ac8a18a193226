//! Gas in a cylinder closed by a piston under gravity, an external force and
//! heat exchange with a thermostat.
//!
//! State `x = (S, V, q, p)`: gas entropy, gas volume, piston height, piston
//! momentum. Inputs `u = (u₁, u₂)`: thermostat temperature and external force.
//! Energy `H = U(S, V) + p²/(2m) + m g q` with the ideal-gas law
//! `U = U_ref exp((S − S_ref)/(c N₀ R)) (V_ref/V)^{1/c}`.

use crate::discrete_gradient::ScalarField;
use crate::error::{Error, Result};
use crate::linalg::{invalid, Matrix};
use crate::scalar::Real;
use crate::system::{DissipationTerm, IphsSystem, IrreversiblePort, ReversiblePort, SkewMatrix};

pub const STATE_NAMES: [&str; 4] = ["S", "V", "q", "p"];
pub const INPUT_DIM: usize = 2;

/// Physical parameters. Defaults are the reference scenario with unit piston
/// mass, area, mole number and gas constant.
#[derive(Debug, Clone, PartialEq)]
pub struct GasPistonParams<R> {
    pub mass: R,
    pub area: R,
    pub gravity: R,
    /// Friction/viscosity coefficient μ ≥ 0.
    pub mu: R,
    /// Heat conduction coefficient λ_e > 0.
    pub lambda_e: R,
    /// Heat-capacity exponent (3/2 for a monatomic gas).
    pub c: R,
    pub n0: R,
    pub r: R,
    pub u_ref: R,
    pub v_ref: R,
    pub s_ref: R,
}

impl<R: Real> Default for GasPistonParams<R> {
    fn default() -> Self {
        Self {
            mass: R::one(),
            area: R::one(),
            gravity: R::lit(10.0),
            mu: R::lit(0.5),
            lambda_e: R::one(),
            c: R::lit(1.5),
            n0: R::one(),
            r: R::one(),
            u_ref: R::one(),
            v_ref: R::one(),
            s_ref: R::zero(),
        }
    }
}

impl<R: Real> GasPistonParams<R> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("area", self.area),
            ("lambda_e", self.lambda_e),
            ("c", self.c),
            ("n0", self.n0),
            ("r", self.r),
            ("u_ref", self.u_ref),
            ("v_ref", self.v_ref),
        ];
        for (name, value) in positive {
            if !(value > R::zero()) || !value.is_finite() {
                return Err(invalid(name, format!("must be positive, got {value}")));
            }
        }
        if !(self.mu >= R::zero()) || !self.mu.is_finite() {
            return Err(invalid("mu", format!("must be nonnegative, got {}", self.mu)));
        }
        for (name, value) in [("gravity", self.gravity), ("s_ref", self.s_ref)] {
            if !value.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    fn heat_capacity(&self) -> R {
        self.c * self.n0 * self.r
    }

    fn energy_unchecked(&self, s: R, v: R) -> R {
        self.u_ref * ((s - self.s_ref) / self.heat_capacity()).exp() * (self.v_ref / v).powf(self.c.recip())
    }
}

/// Which ports are attached. The reference scenario uses both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GasPistonPorts {
    pub heat: bool,
    pub force: bool,
}

impl Default for GasPistonPorts {
    fn default() -> Self {
        Self {
            heat: true,
            force: true,
        }
    }
}

impl GasPistonPorts {
    pub const CLOSED: Self = Self {
        heat: false,
        force: false,
    };
}

fn check_volume<R: Real>(v: R) -> Result<()> {
    if v > R::zero() {
        Ok(())
    } else {
        Err(Error::DomainViolation(format!("gas volume must be positive, got {v}")))
    }
}

pub fn internal_energy<R: Real>(s: R, v: R, p: &GasPistonParams<R>) -> Result<R> {
    check_volume(v)?;
    Ok(p.energy_unchecked(s, v))
}

/// `T = ∂U/∂S = U/(c N₀ R)`
pub fn temperature<R: Real>(s: R, v: R, p: &GasPistonParams<R>) -> Result<R> {
    Ok(internal_energy(s, v, p)? / p.heat_capacity())
}

/// `P = −∂U/∂V = U/(c V)`
pub fn pressure<R: Real>(s: R, v: R, p: &GasPistonParams<R>) -> Result<R> {
    Ok(internal_energy(s, v, p)? / (p.c * v))
}

/// `(S, V)` at which the gas has temperature `t` and pressure `pr`.
pub fn entropy_volume_at<R: Real>(t: R, pr: R, p: &GasPistonParams<R>) -> Result<(R, R)> {
    if !(t > R::zero()) || !(pr > R::zero()) {
        return Err(invalid("temperature", "temperature and pressure must be positive"));
    }
    let v = p.n0 * p.r * t / pr;
    let u = p.heat_capacity() * t;
    let s = p.s_ref + p.heat_capacity() * ((u / p.u_ref).ln() - (p.v_ref / v).ln() / p.c);
    Ok((s, v))
}

/// Rest state with `T = u₁` and `A P = m g − u₂`, at height `q`.
pub fn equilibrium_state<R: Real>(u: &[R], q: R, p: &GasPistonParams<R>) -> Result<Vec<R>> {
    crate::error::check_len("gas-piston input", INPUT_DIM, u.len())?;
    let pr = (p.mass * p.gravity - u[1]) / p.area;
    let (s, v) = entropy_volume_at(u[0], pr, p)?;
    Ok(vec![s, v, q, R::zero()])
}

pub fn energy_field<R: Real>(params: &GasPistonParams<R>) -> ScalarField<R> {
    let pv = params.clone();
    let pg = params.clone();
    ScalarField::new(
        4,
        move |x: &[R]| {
            let kinetic = x[3] * x[3] / (pv.mass + pv.mass);
            if x[1] > R::zero() {
                pv.energy_unchecked(x[0], x[1]) + kinetic + pv.mass * pv.gravity * x[2]
            } else {
                R::nan()
            }
        },
        move |x: &[R]| {
            if !(x[1] > R::zero()) {
                return vec![R::nan(); 4];
            }
            let u = pg.energy_unchecked(x[0], x[1]);
            vec![
                u / pg.heat_capacity(),
                -u / (pg.c * x[1]),
                pg.mass * pg.gravity,
                x[3] / pg.mass,
            ]
        },
    )
}

fn unit_column<R: Real>(row: usize, col: usize) -> Matrix<R> {
    let mut g = Matrix::zeros(4, INPUT_DIM);
    g.set(row, col, R::one());
    g
}

/// The reference system with both ports.
pub fn build_gas_piston<R: Real>(params: &GasPistonParams<R>) -> Result<IphsSystem<R>> {
    build_gas_piston_with(params, GasPistonPorts::default())
}

/// Gas-piston system with a chosen set of ports. The friction term is omitted
/// when `μ = 0`, since its coefficient must be strictly positive.
pub fn build_gas_piston_with<R: Real>(params: &GasPistonParams<R>, ports: GasPistonPorts) -> Result<IphsSystem<R>> {
    params.validate()?;
    let (o, l, a) = (R::zero(), R::one(), params.area);

    // couples piston motion to entropy: {S,H}_J = v
    let friction = SkewMatrix::from_rows(&[vec![o, o, o, l], vec![o, o, o, o], vec![o, o, o, o], vec![-l, o, o, o]])?;
    let mechanics = SkewMatrix::from_rows(&[vec![o, o, o, o], vec![o, o, o, a], vec![o, o, o, l], vec![o, -a, -l, o]])?;

    let mut builder = IphsSystem::builder(
        4,
        INPUT_DIM,
        energy_field(params),
        ScalarField::linear(vec![l, o, o, o]),
    )
    .linear_entropy(true)
    .reversible(mechanics)
    .domain_guard(|x: &[R]| x[1] > R::zero());

    if params.mu > R::zero() {
        let p = params.clone();
        builder = builder.dissipation(DissipationTerm::new(friction, move |x: &[R]| {
            p.mu * p.heat_capacity() / p.energy_unchecked(x[0], x[1])
        }));
    }
    if ports.heat {
        let p = params.clone();
        builder = builder.irreversible_port(IrreversiblePort::new(
            unit_column(0, 0),
            vec![l, o],
            move |x: &[R], u: &[R]| {
                let t = p.energy_unchecked(x[0], x[1]) / p.heat_capacity();
                p.lambda_e / (t * u[0] * u[0])
            },
        ));
    }
    if ports.force {
        builder = builder.reversible_port(ReversiblePort::new(unit_column(3, 1)));
    }
    builder.build()
}

pub type Observable<R> = Box<dyn Fn(&[R]) -> R>;

/// Per-state observables `(name, value)`: energy, temperature, pressure, velocity
/// and internal energy.
pub fn observables<R: Real>(params: &GasPistonParams<R>) -> Vec<(&'static str, Observable<R>)> {
    let hf = energy_field(params);
    let (pt, pp, pv, pu) = (params.clone(), params.clone(), params.clone(), params.clone());
    vec![
        ("H", Box::new(move |x: &[R]| hf.value(x))),
        (
            "T",
            Box::new(move |x: &[R]| pt.energy_unchecked(x[0], x[1]) / pt.heat_capacity()),
        ),
        (
            "P",
            Box::new(move |x: &[R]| pp.energy_unchecked(x[0], x[1]) / (pp.c * x[1])),
        ),
        ("v", Box::new(move |x: &[R]| x[3] / pv.mass)),
        ("U", Box::new(move |x: &[R]| pu.energy_unchecked(x[0], x[1]))),
    ]
}

pub fn initial_state<R: Real>() -> Vec<R> {
    [2.0, 4.0, 1.0, 0.0].into_iter().map(R::lit).collect()
}

/// Thermostat at 10, downward external force 10.
pub fn reference_controls<R: Real>() -> Vec<R> {
    vec![R::lit(10.0), R::lit(-10.0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_gradient::numeric_gradient;
    use crate::system::discrete_bracket;

    fn params() -> GasPistonParams<f64> {
        GasPistonParams::default()
    }

    #[test]
    fn internal_energy_examples() {
        let p = params();
        assert_eq!(internal_energy(0.0, 1.0, &p).unwrap(), 1.0);
        assert!((internal_energy(0.0, 8.0, &p).unwrap() - 0.25).abs() < 1e-15);
        let s = 1.5 * 2f64.ln();
        assert!((internal_energy(s, 1.0, &p).unwrap() - 2.0).abs() < 1e-14);
        assert!(matches!(internal_energy(0.0, 0.0, &p), Err(Error::DomainViolation(_))));
        assert!(internal_energy(0.0, -1.0, &p).is_err());
    }

    #[test]
    fn temperature_and_pressure_examples() {
        let p = params();
        assert!((temperature(0.0, 1.0, &p).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((pressure(0.0, 1.0, &p).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let t0 = temperature(0.3, 2.0, &p).unwrap();
        let t1 = temperature(0.3 + 1.5 * 2f64.ln(), 2.0, &p).unwrap();
        assert!((t1 - 2.0 * t0).abs() < 1e-14);
        assert!(pressure(1.0, 4.0, &p).unwrap() < pressure(1.0, 2.0, &p).unwrap());
        assert!(temperature(0.0, 0.0, &p).is_err() && pressure(0.0, -2.0, &p).is_err());
    }

    #[test]
    fn ideal_gas_law() {
        let p = GasPistonParams {
            n0: 2.0,
            r: 0.7,
            ..params()
        };
        for &(s, v) in &[(0.0, 1.0), (2.0, 4.0), (-1.0, 0.3), (5.0, 12.0)] {
            let lhs = pressure(s, v, &p).unwrap() * v;
            let rhs = p.n0 * p.r * temperature(s, v, &p).unwrap();
            assert!((lhs - rhs).abs() <= 1e-13 * rhs.abs());
        }
    }

    #[test]
    fn energy_gradient_matches_finite_differences() {
        let f = energy_field(&params());
        for x in [[2.0, 4.0, 1.0, 0.0], [0.5, 0.7, -0.3, 1.2], [3.0, 1.5, 2.0, -2.0]] {
            let num = numeric_gradient(|z: &[f64]| f.value(z), &x, 1e-6).unwrap();
            for (a, b) in f.gradient(&x).iter().zip(&num) {
                assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn brackets_reduce_to_velocity_and_temperature_gap() {
        let p = params();
        let sys = build_gas_piston(&p).unwrap();
        let x = [1.2, 2.5, 0.4, 0.8];
        let grad_h = sys.hamiltonian().gradient(&x);
        let grad_s = sys.entropy().gradient(&x);
        let b = discrete_bracket(&sys.dissipation()[0].structure, &grad_s, &grad_h).unwrap();
        assert_eq!(b, x[3] / p.mass);

        let port = &sys.irreversible_ports()[0];
        let u = [10.0, -10.0];
        let b = crate::system::discrete_port_bracket(&port.g, &grad_s, &grad_h, &u, &port.tau).unwrap();
        let t = temperature(x[0], x[1], &p).unwrap();
        assert!((b - (u[0] - t)).abs() < 1e-14);
    }

    #[test]
    fn rhs_matches_equations_of_motion() {
        let p = params();
        let sys = build_gas_piston(&p).unwrap();
        let x = [1.2, 2.5, 0.4, 0.8];
        let u = [10.0, -10.0];
        let (dx, y) = sys.continuous_rhs(&x, &u).unwrap();
        let t = temperature(x[0], x[1], &p).unwrap();
        let pr = pressure(x[0], x[1], &p).unwrap();
        let v = x[3];
        let expected = [
            p.mu * v * v / t + p.lambda_e * (1.0 / t - 1.0 / u[0]),
            p.area * v,
            v,
            p.area * pr - p.mass * p.gravity - p.mu * v + u[1],
        ];
        for (a, b) in dx.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-13, "{dx:?} vs {expected:?}");
        }
        let y1 = p.lambda_e * (u[0] - t) / (u[0] * u[0]);
        assert!((y[0] - y1).abs() < 1e-15 && (y[1] - v).abs() < 1e-15);
    }

    #[test]
    fn rest_at_thermostat_temperature_has_no_entropy_change() {
        let p = params();
        let sys = build_gas_piston(&p).unwrap();
        let (s, v) = entropy_volume_at(10.0, 3.0, &p).unwrap();
        let (dx, _) = sys.continuous_rhs(&[s, v, 0.0, 0.0], &[10.0, -10.0]).unwrap();
        assert!(dx[0].abs() < 1e-15);
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let p = params();
        let sys = build_gas_piston(&p).unwrap();
        let u = [10.0, -10.0];
        let x = equilibrium_state(&u, 0.7, &p).unwrap();
        assert!((temperature(x[0], x[1], &p).unwrap() - 10.0).abs() < 1e-12);
        assert!((pressure(x[0], x[1], &p).unwrap() - 20.0).abs() < 1e-12);
        let (dx, _) = sys.continuous_rhs(&x, &u).unwrap();
        assert!(dx.iter().all(|d| d.abs() < 1e-12), "{dx:?}");
    }

    #[test]
    fn validation_passes_on_physical_samples() {
        let sys = build_gas_piston(&params()).unwrap();
        let states = vec![
            vec![2.0, 4.0, 1.0, 0.0],
            vec![0.0, 0.5, -2.0, 3.0],
            vec![4.0, 10.0, 5.0, -1.0],
        ];
        let report = sys.validate_structure(&states, &[vec![10.0, -10.0], vec![1.0, 0.0]]);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(build_gas_piston(&GasPistonParams { area: 0.0, ..params() }).is_err());
        assert!(build_gas_piston(&GasPistonParams { mu: -0.1, ..params() }).is_err());
        assert!(build_gas_piston(&GasPistonParams {
            lambda_e: f64::NAN,
            ..params()
        })
        .is_err());
    }

    #[test]
    fn closed_variant_has_no_ports_or_friction() {
        let sys = build_gas_piston_with(&GasPistonParams { mu: 0.0, ..params() }, GasPistonPorts::CLOSED).unwrap();
        assert!(sys.dissipation().is_empty());
        assert!(sys.irreversible_ports().is_empty() && sys.reversible_ports().is_empty());
    }
}
