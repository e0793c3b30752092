//! Small dense matrices and a Cholesky solver with a jitter ladder.
//!
//! The Gram matrices in this crate are tiny (n is a few dozen), so a plain
//! row-major matrix and an unblocked LLT factorization are all that is
//! needed. Noise-free kernels on dense designs routinely produce matrices
//! that are positive definite only up to rounding; [`cholesky_with_jitter`]
//! retries the factorization along an ascending diagonal-jitter ladder and
//! reports the level that succeeded.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Matrix {
            nrows,
            ncols,
            data: vec![T::zero(); nrows * ncols],
        }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                data.push(f(i, j));
            }
        }
        Matrix { nrows, ncols, data }
    }

    /// Build from row slices; every row must have the same length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { nrows, ncols, data })
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.ncols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.ncols)
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    /// `self * v` for a column vector `v`.
    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.ncols);
        self.rows().map(|row| dot(row, v)).collect()
    }

    /// `self^T * v`.
    pub fn transpose_matvec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.nrows);
        let mut out = vec![T::zero(); self.ncols];
        for (i, row) in self.rows().enumerate() {
            let vi = v[i];
            for (o, &r) in out.iter_mut().zip(row) {
                *o += vi * r;
            }
        }
        out
    }

    /// Largest absolute asymmetry `max_ij |a_ij - a_ji|`; zero for symmetric.
    pub fn asymmetry(&self) -> T {
        assert_eq!(self.nrows, self.ncols, "asymmetry needs a square matrix");
        let mut worst = T::zero();
        for i in 0..self.nrows {
            for j in (i + 1)..self.ncols {
                let diff = (self.get(i, j) - self.get(j, i)).abs();
                if diff > worst {
                    worst = diff;
                }
            }
        }
        worst
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn euclidean_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    lower: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Unblocked LLT. Fails (returns `None`) on a non-positive or non-finite
    /// pivot, which is how callers detect loss of positive definiteness.
    pub fn new(a: &Matrix<T>) -> Option<Self> {
        assert_eq!(a.nrows(), a.ncols(), "cholesky needs a square matrix");
        let n = a.nrows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut diag = a.get(j, j);
            for k in 0..j {
                let ljk = l.get(j, k);
                diag = diag - ljk * ljk;
            }
            if !(diag > T::zero()) || !diag.is_finite() {
                return None;
            }
            let ljj = diag.sqrt();
            l.set(j, j, ljj);
            for i in (j + 1)..n {
                let mut sum = a.get(i, j);
                for k in 0..j {
                    sum = sum - l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, sum / ljj);
            }
        }
        Some(Cholesky { lower: l })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Solve `L z = b` (forward substitution only). Useful for quadratic
    /// forms: `b^T A^-1 b = ||L^-1 b||^2`, which stays nonnegative in
    /// floating point.
    pub fn forward_solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let l = &self.lower;
        let mut z = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let t = l.get(i, k) * z[k];
                z[i] = z[i] - t;
            }
            z[i] = z[i] / l.get(i, i);
        }
        z
    }

    /// Solve `A x = b` via forward/back substitution.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let t = l.get(i, k) * y[k];
                y[i] = y[i] - t;
            }
            y[i] = y[i] / l.get(i, i);
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let t = l.get(k, i) * y[k];
                y[i] = y[i] - t;
            }
            y[i] = y[i] / l.get(i, i);
        }
        y
    }

    /// `ln |A|`, computed from the factor diagonal.
    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        (0..self.dim())
            .map(|i| self.lower.get(i, i).ln())
            .fold(T::zero(), |acc, v| acc + v)
            * two
    }

    pub fn lower(&self) -> &Matrix<T> {
        &self.lower
    }
}

/// Default jitter ladder, tried in ascending order.
pub fn default_jitter_ladder<T: Scalar>() -> Vec<T> {
    [0.0, 1e-10, 1e-8, 1e-6].iter().map(|&v| T::lit(v)).collect()
}

/// Factorize `a + jitter * I`, walking `ladder` upward until LLT succeeds.
/// Returns the factor together with the jitter that was used.
pub fn cholesky_with_jitter<T: Scalar>(a: &Matrix<T>, ladder: &[T]) -> Result<(Cholesky<T>, T)> {
    let n = a.nrows();
    for &jitter in ladder {
        let candidate = if jitter == T::zero() {
            a.clone()
        } else {
            let mut shifted = a.clone();
            for i in 0..n {
                shifted.set(i, i, shifted.get(i, i) + jitter);
            }
            shifted
        };
        if let Some(chol) = Cholesky::new(&candidate) {
            return Ok((chol, jitter));
        }
    }
    Err(Error::IllConditioned {
        max_jitter: ladder.last().map_or(0.0, |j| j.as_f64()),
    })
}
