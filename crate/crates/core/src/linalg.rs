//! Thin wrappers over faer for the dense paths.

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use num_complex::Complex64 as C;

use crate::error::{Error, Result};

pub fn to_complex(a: &Mat<f64>) -> Mat<C> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| C::from(a[(i, j)]))
}

/// `mu I - a` as a complex matrix.
pub fn shifted(a: &Mat<f64>, mu: C) -> Mat<C> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        let d = if i == j { mu } else { C::from(0.0) };
        d - a[(i, j)]
    })
}

pub fn norm1(a: &Mat<C>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, |acc, x| if x.is_nan() || x > acc { x } else { acc })
}

/// Largest and smallest singular values.
pub fn singular_extremes(a: &Mat<C>) -> Result<(f64, f64)> {
    let s = a
        .singular_values()
        .map_err(|e| Error::Eigensolver(format!("singular value decomposition failed: {e:?}")))?;
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.last().copied().unwrap_or(0.0);
    Ok((max, min))
}

/// Eigenvalues and unit-norm eigenvectors (as columns) of a real matrix.
pub fn eigen(a: &Mat<f64>) -> Result<(Vec<C>, Mat<C>)> {
    let evd = a.eigen().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let n = a.nrows();
    let values: Vec<C> = (0..n).map(|i| evd.S()[i]).collect();
    let mut vectors = Mat::from_fn(n, n, |i, j| evd.U()[(i, j)]);
    for j in 0..n {
        let norm = (0..n).map(|i| vectors[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..n {
                vectors[(i, j)] /= norm;
            }
        }
    }
    Ok((values, vectors))
}

pub fn eigenvalues(a: &Mat<f64>) -> Result<Vec<C>> {
    a.eigenvalues().map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// Inverse with its 1-norm condition number.
pub fn inverse_with_condition(a: &Mat<C>) -> (Mat<C>, f64) {
    let inv = a.partial_piv_lu().inverse();
    let cond = norm1(a) * norm1(&inv);
    (inv, if cond.is_finite() { cond } else { f64::INFINITY })
}

pub fn matvec(a: &Mat<C>, x: &[C]) -> Vec<C> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum())
        .collect()
}
