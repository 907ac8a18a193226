//! Small dense vectors and matrices. State dimensions here are single digits, so
//! row-major `Vec` storage and partial-pivot elimination are all that is needed.

use crate::error::{check_len, Error, Result};
use crate::scalar::Real;

pub fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter().zip(b).fold(R::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm<R: Real>(a: &[R]) -> R {
    dot(a, a).sqrt()
}

pub fn sub<R: Real>(a: &[R], b: &[R]) -> Vec<R> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn midpoint<R: Real>(a: &[R], b: &[R]) -> Vec<R> {
    let half = R::lit(0.5);
    a.iter().zip(b).map(|(&x, &y)| (x + y) * half).collect()
}

/// `acc += alpha * v`
pub fn axpy<R: Real>(acc: &mut [R], alpha: R, v: &[R]) {
    for (a, &x) in acc.iter_mut().zip(v) {
        *a += alpha * x;
    }
}

pub fn all_finite<R: Real>(v: &[R]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> Matrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![R::zero(); rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<R>) -> Result<Self> {
        check_len("matrix entries", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<R>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for row in rows {
            check_len("matrix row", ncols, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols: ncols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> R {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: R) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `A v`
    pub fn mul_vec(&self, v: &[R]) -> Vec<R> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `Aᵀ v`
    pub fn tr_mul_vec(&self, v: &[R]) -> Vec<R> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![R::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            axpy(&mut out, vi, self.row(i));
        }
        out
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |m, x| m.max(x.abs()))
    }

    /// `max |a_ij + a_ji|`, or infinity for a non-square matrix.
    pub fn skew_defect(&self) -> R {
        if self.rows != self.cols {
            return R::infinity();
        }
        let mut worst = R::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self.get(i, j) + self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Why a linear solve was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSolveError {
    Singular,
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// A pivot smaller than `1e-14 * max|A|` is treated as singular.
pub fn solve_dense<R: Real>(a: &Matrix<R>, b: &[R]) -> std::result::Result<Vec<R>, LinearSolveError> {
    let n = a.rows();
    assert_eq!(a.cols(), n, "solve_dense needs a square matrix");
    assert_eq!(b.len(), n, "solve_dense right-hand side length");
    let scale = a.max_abs();
    let threshold = R::lit(1e-14) * scale;
    if scale == R::zero() || !scale.is_finite() {
        return Err(LinearSolveError::Singular);
    }
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                m.get(i, col)
                    .abs()
                    .partial_cmp(&m.get(j, col).abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        let pivot = m.get(pivot_row, col);
        if !(pivot.abs() > threshold) {
            return Err(LinearSolveError::Singular);
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = m.get(col, j);
                m.set(col, j, m.get(pivot_row, j));
                m.set(pivot_row, j, tmp);
            }
            rhs.swap(col, pivot_row);
        }
        for i in (col + 1)..n {
            let factor = m.get(i, col) / pivot;
            if factor == R::zero() {
                continue;
            }
            for j in col..n {
                let v = m.get(i, j) - factor * m.get(col, j);
                m.set(i, j, v);
            }
            rhs[i] = rhs[i] - factor * rhs[col];
        }
    }
    let mut x = vec![R::zero(); n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in (i + 1)..n {
            acc -= m.get(i, j) * x[j];
        }
        x[i] = acc / m.get(i, i);
    }
    Ok(x)
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
