#![allow(dead_code)]

use iphs::linalg::{dot, Matrix};
use iphs::{DissipationTerm, IphsSystem, IrreversiblePort, ReversiblePort, ScalarField, SkewMatrix};
use rand::rngs::StdRng;
use rand::Rng;

/// Sum of monomials `c · Π xᵢ^{kᵢ}` with exact value and gradient.
#[derive(Debug, Clone)]
pub struct Polynomial {
    pub dim: usize,
    pub terms: Vec<(f64, Vec<i32>)>,
}

impl Polynomial {
    pub fn random(rng: &mut StdRng, dim: usize, max_degree: i32, n_terms: usize) -> Self {
        let terms = (0..n_terms)
            .map(|_| {
                let degree = rng.gen_range(1..=max_degree);
                let mut exps = vec![0; dim];
                for _ in 0..degree {
                    exps[rng.gen_range(0..dim)] += 1;
                }
                (rng.gen_range(-1.0..1.0), exps)
            })
            .collect();
        Self { dim, terms }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k)).product::<f64>())
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (c, e) in &self.terms {
            for i in 0..self.dim {
                if e[i] == 0 {
                    continue;
                }
                let mut term = c * e[i] as f64;
                for j in 0..self.dim {
                    let k = if j == i { e[j] - 1 } else { e[j] };
                    term *= x[j].powi(k);
                }
                g[i] += term;
            }
        }
        g
    }

    pub fn field(&self) -> ScalarField<f64> {
        let (a, b) = (self.clone(), self.clone());
        ScalarField::new(self.dim, move |x: &[f64]| a.value(x), move |x: &[f64]| b.gradient(x))
    }
}

pub fn uniform_vec(rng: &mut StdRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize, scale: f64) -> Matrix<f64> {
    Matrix::from_row_major(rows, cols, uniform_vec(rng, rows * cols, -scale, scale)).unwrap()
}

fn skew_part(a: &Matrix<f64>) -> Matrix<f64> {
    let n = a.rows();
    let mut s = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s.set(i, j, 0.5 * (a.get(i, j) - a.get(j, i)));
        }
    }
    s
}

fn matmul(a: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let v = (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum();
            out.set(i, j, v);
        }
    }
    out
}

/// `I − ĉĉᵀ`
fn projector(c: &[f64]) -> Matrix<f64> {
    let n = c.len();
    let len2 = dot(c, c);
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            p.set(i, j, id - c[i] * c[j] / len2);
        }
    }
    p
}

/// Bounded positive coefficient `exp(0.5 sin(wᵀx))`.
fn positive_field(w: Vec<f64>) -> impl Fn(&[f64]) -> f64 + Send + Sync + 'static {
    move |x: &[f64]| (0.5 * dot(&w, x).sin()).exp()
}

pub struct RandomIphs {
    pub system: IphsSystem<f64>,
    pub x0: Vec<f64>,
    pub u: Vec<f64>,
}

/// Random IPHS with constant skew structure, linear entropy `cᵀx`, reversible
/// structures and ports projected onto `c⊥`, positive γ of the form
/// `exp(bounded)`, and energy `½xᵀQx + ¼ Σ aᵢ xᵢ⁴` with `Q` positive definite.
pub fn random_iphs(rng: &mut StdRng) -> RandomIphs {
    let n = rng.gen_range(2..=6);
    let m = rng.gen_range(1..=3);

    let b = random_matrix(rng, n, n, 1.0);
    let mut q = matmul(&b.transpose(), &b);
    for i in 0..n {
        q.set(i, i, q.get(i, i) / n as f64 + 0.5);
        for j in 0..n {
            if i != j {
                q.set(i, j, q.get(i, j) / n as f64);
            }
        }
    }
    let quartic = uniform_vec(rng, n, 0.0, 0.5);
    let (q1, q2, a1, a2) = (q.clone(), q, quartic.clone(), quartic);
    let energy = ScalarField::new(
        n,
        move |x: &[f64]| {
            0.5 * dot(x, &q1.mul_vec(x)) + x.iter().zip(&a1).map(|(xi, a)| 0.25 * a * xi.powi(4)).sum::<f64>()
        },
        move |x: &[f64]| {
            let mut g = q2.mul_vec(x);
            for i in 0..x.len() {
                g[i] += a2[i] * x[i].powi(3);
            }
            g
        },
    );

    let c = uniform_vec(rng, n, -1.0, 1.0);
    let proj = projector(&c);
    let mut builder = IphsSystem::builder(n, m, energy, ScalarField::linear(c)).linear_entropy(true);

    for _ in 0..rng.gen_range(1..=2) {
        let j = SkewMatrix::new(skew_part(&random_matrix(rng, n, n, 1.0))).unwrap();
        let gamma = positive_field(uniform_vec(rng, n, -1.0, 1.0));
        builder = builder.dissipation(DissipationTerm::new(j, gamma));
    }
    for _ in 0..rng.gen_range(1..=2) {
        let w = random_matrix(rng, n, n, 1.0);
        let m_alpha = skew_part(&matmul(&matmul(&proj, &w), &proj));
        builder = builder.reversible(SkewMatrix::new(m_alpha).unwrap());
    }
    for _ in 0..rng.gen_range(1..=2) {
        let g = random_matrix(rng, n, m, 0.5);
        let tau = uniform_vec(rng, m, -1.0, 1.0);
        let wx = uniform_vec(rng, n, -1.0, 1.0);
        let wu = uniform_vec(rng, m, -1.0, 1.0);
        builder = builder.irreversible_port(IrreversiblePort::new(g, tau, move |x: &[f64], u: &[f64]| {
            (0.5 * (dot(&wx, x) + dot(&wu, u)).tanh()).exp()
        }));
    }
    if rng.gen_bool(0.7) {
        let g = matmul(&proj, &random_matrix(rng, n, m, 0.5));
        builder = builder.reversible_port(ReversiblePort::new(g));
    }
    RandomIphs {
        system: builder.build().unwrap(),
        x0: uniform_vec(rng, n, -1.0, 1.0),
        u: uniform_vec(rng, m, -1.0, 1.0),
    }
}
