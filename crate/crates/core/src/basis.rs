//! Closed-form eigenpairs of the Laplacian on an interval `(0, L)`.
//!
//! Dirichlet modes are `sqrt(2/L) sin(k pi x / L)` and Neumann modes are
//! `sqrt(2/L) cos(k pi x / L)` for `k = 1, 2, ...`. The constant Neumann mode
//! is excluded, so both families live in the mean-zero space and both share
//! the eigenvalues `(k pi / L)^2`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{AddAssign, Mul};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

impl BoundaryKind {
    pub fn letter(self) -> char {
        match self {
            BoundaryKind::Dirichlet => 'D',
            BoundaryKind::Neumann => 'N',
        }
    }
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for BoundaryKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d" | "dirichlet" => Ok(BoundaryKind::Dirichlet),
            "n" | "neumann" => Ok(BoundaryKind::Neumann),
            other => Err(invalid(format!("unknown boundary kind '{other}'"))),
        }
    }
}

/// Boundary kinds for the displacement and the temperature, in that order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BcPair {
    pub u: BoundaryKind,
    pub theta: BoundaryKind,
}

impl BcPair {
    pub const DD: BcPair = BcPair::new(BoundaryKind::Dirichlet, BoundaryKind::Dirichlet);
    pub const DN: BcPair = BcPair::new(BoundaryKind::Dirichlet, BoundaryKind::Neumann);
    pub const ND: BcPair = BcPair::new(BoundaryKind::Neumann, BoundaryKind::Dirichlet);
    pub const NN: BcPair = BcPair::new(BoundaryKind::Neumann, BoundaryKind::Neumann);
    pub const ALL: [BcPair; 4] = [BcPair::DD, BcPair::DN, BcPair::ND, BcPair::NN];

    pub const fn new(u: BoundaryKind, theta: BoundaryKind) -> Self {
        BcPair { u, theta }
    }

    pub fn same_basis(self) -> bool {
        self.u == self.theta
    }
}

impl fmt::Display for BcPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.u, self.theta)
    }
}

impl FromStr for BcPair {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next(), chars.next()) {
            (Some(a), Some(b), None) => Ok(BcPair::new(
                a.to_string().parse()?,
                b.to_string().parse()?,
            )),
            _ => Err(invalid(format!(
                "boundary pair '{s}' must be two letters from {{D, N}}, e.g. DN"
            ))),
        }
    }
}

/// Truncated orthonormal eigenbasis of the Dirichlet or mean-zero Neumann Laplacian.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalBasis {
    kind: BoundaryKind,
    length: f64,
    eigenvalues: Vec<f64>,
}

impl ModalBasis {
    pub fn new(kind: BoundaryKind, length: f64, mode_count: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(invalid(format!("interval length must be positive, got {length}")));
        }
        if mode_count == 0 {
            return Err(invalid("mode count must be at least 1"));
        }
        let eigenvalues = (1..=mode_count)
            .map(|k| {
                let w = k as f64 * PI / length;
                w * w
            })
            .collect();
        Ok(ModalBasis { kind, length, eigenvalues })
    }

    pub fn kind(&self) -> BoundaryKind {
        self.kind
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues in increasing order; index `m` holds `((m+1) pi / L)^2`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Angular wavenumber of zero-based mode `m`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        (m + 1) as f64 * PI / self.length
    }

    fn norm_const(&self) -> f64 {
        (2.0 / self.length).sqrt()
    }

    /// Value of zero-based basis function `m` at `x`. No range check.
    pub fn function(&self, m: usize, x: f64) -> f64 {
        let k = self.wavenumber(m);
        match self.kind {
            BoundaryKind::Dirichlet => self.norm_const() * (k * x).sin(),
            BoundaryKind::Neumann => self.norm_const() * (k * x).cos(),
        }
    }

    /// First derivative of zero-based basis function `m` at `x`.
    pub fn derivative(&self, m: usize, x: f64) -> f64 {
        let k = self.wavenumber(m);
        match self.kind {
            BoundaryKind::Dirichlet => self.norm_const() * k * (k * x).cos(),
            BoundaryKind::Neumann => -self.norm_const() * k * (k * x).sin(),
        }
    }

    /// Synthesizes the truncated expansion `sum_m c_m e_m(x)` at each point.
    pub fn evaluate<T>(&self, coefficients: &[T], points: &[f64]) -> Result<Vec<T>>
    where
        T: Copy + Default + Mul<f64, Output = T> + AddAssign,
    {
        self.synthesize(coefficients, points, |m, x| self.function(m, x))
    }

    /// Derivative of the truncated expansion at each point.
    pub fn evaluate_derivative<T>(&self, coefficients: &[T], points: &[f64]) -> Result<Vec<T>>
    where
        T: Copy + Default + Mul<f64, Output = T> + AddAssign,
    {
        self.synthesize(coefficients, points, |m, x| self.derivative(m, x))
    }

    fn synthesize<T, F>(&self, coefficients: &[T], points: &[f64], f: F) -> Result<Vec<T>>
    where
        T: Copy + Default + Mul<f64, Output = T> + AddAssign,
        F: Fn(usize, f64) -> f64,
    {
        if coefficients.len() > self.mode_count() {
            return Err(invalid(format!(
                "{} coefficients exceed the basis size {}",
                coefficients.len(),
                self.mode_count()
            )));
        }
        points
            .iter()
            .map(|&x| {
                if !(0.0..=self.length).contains(&x) {
                    return Err(invalid(format!("point {x} outside [0, {}]", self.length)));
                }
                let mut acc = T::default();
                for (m, &c) in coefficients.iter().enumerate() {
                    acc += c * f(m, x);
                }
                Ok(acc)
            })
            .collect()
    }
}

/// Dense matrix of L2 inner products between two truncated bases.
///
/// `entry(m, k) = <col_k, row_m>`, so multiplying by the matrix maps column-basis
/// coefficients to the coefficients of their projection onto the row basis.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        GramMatrix { rows: n, cols: n, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.entries[m * self.cols + k]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.entries[m * self.cols..(m + 1) * self.cols]
    }

    pub fn transpose(&self) -> GramMatrix {
        let mut entries = vec![0.0; self.entries.len()];
        for m in 0..self.rows {
            for k in 0..self.cols {
                entries[k * self.rows + m] = self.get(m, k);
            }
        }
        GramMatrix { rows: self.cols, cols: self.rows, entries }
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|m| {
                (0..self.cols).all(|k| self.get(m, k) == if m == k { 1.0 } else { 0.0 })
            })
    }
}

/// Gram matrix between `row_basis` and `col_basis` from closed forms.
pub fn gram(row_basis: &ModalBasis, col_basis: &ModalBasis) -> Result<GramMatrix> {
    let scale = row_basis.length().max(col_basis.length());
    if (row_basis.length() - col_basis.length()).abs() > 1e-14 * scale {
        return Err(invalid(format!(
            "bases live on different intervals ({} vs {})",
            row_basis.length(),
            col_basis.length()
        )));
    }
    let rows = row_basis.mode_count();
    let cols = col_basis.mode_count();
    let mut entries = vec![0.0; rows * cols];
    for m in 0..rows {
        for k in 0..cols {
            entries[m * cols + k] = gram_entry(row_basis.kind(), col_basis.kind(), m + 1, k + 1);
        }
    }
    Ok(GramMatrix { rows, cols, entries })
}

/// `<col_k, row_m>` for one-based indices. Independent of the interval length.
fn gram_entry(row: BoundaryKind, col: BoundaryKind, m: usize, k: usize) -> f64 {
    use BoundaryKind::*;
    if row == col {
        return if m == k { 1.0 } else { 0.0 };
    }
    if (m + k) % 2 == 0 {
        return 0.0;
    }
    let (mf, kf) = (m as f64, k as f64);
    // (2/pi) * int_0^pi sin(a y) cos(b y) dy = (2/pi) * 2a / (a^2 - b^2) for a + b odd
    match (row, col) {
        (Dirichlet, Neumann) => 4.0 * mf / (PI * (mf * mf - kf * kf)),
        (Neumann, Dirichlet) => 4.0 * kf / (PI * (kf * kf - mf * mf)),
        _ => unreachable!(),
    }
}
