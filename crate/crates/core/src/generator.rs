//! Truncated generator of the coupled wave/heat system in coefficient space.
//!
//! The state `U = (u, v, theta)` is stored as three blocks of modal
//! coefficients: `u` and `v` in the displacement basis, `theta` in the
//! temperature basis. The generator acts as
//!
//! ```text
//! A (u, v, theta) = (v, -Lu u - alpha G theta, -beta G^T v - Lt theta)
//! ```
//!
//! where `Lu`, `Lt` are the diagonal eigenvalue matrices and `G` is the Gram
//! matrix between the two bases. The physical system
//! `u_tt - u_xx + gamma theta = 0`, `theta_t - theta_xx - gamma u_t = 0`
//! is `alpha = gamma`, `beta = -gamma`.

use faer::Mat;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::basis::{gram, BcPair, GramMatrix, ModalBasis};
use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::modal::ModalBlock;

/// Coupling constants of `u_tt = -A u - alpha theta`, `theta_t = -A' theta - beta u_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub alpha: f64,
    pub beta: f64,
}

impl Coupling {
    pub fn symmetric(gamma: f64) -> Self {
        Coupling { alpha: gamma, beta: -gamma }
    }

    pub fn general(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(invalid(format!("coupling constants must be finite, got ({alpha}, {beta})")));
        }
        Ok(Coupling { alpha, beta })
    }

    /// `Some(gamma)` for the symmetric (energy-conserving coupling) case.
    pub fn gamma(&self) -> Option<f64> {
        (self.beta == -self.alpha).then_some(self.alpha)
    }

    pub fn is_decoupled(&self) -> bool {
        self.alpha == 0.0 && self.beta == 0.0
    }
}

/// Modal coefficients of `U = (u, v, theta)`; also used for right-hand sides.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub u: Vec<C>,
    pub v: Vec<C>,
    pub theta: Vec<C>,
}

impl StateVector {
    pub fn new(u: Vec<C>, v: Vec<C>, theta: Vec<C>) -> Result<Self> {
        if u.len() != v.len() || u.len() != theta.len() {
            return Err(invalid(format!(
                "state blocks have unequal lengths ({}, {}, {})",
                u.len(),
                v.len(),
                theta.len()
            )));
        }
        Ok(StateVector { u, v, theta })
    }

    pub fn zeros(n: usize) -> Self {
        let z = vec![C::new(0.0, 0.0); n];
        StateVector { u: z.clone(), v: z.clone(), theta: z }
    }

    pub fn from_real(u: &[f64], v: &[f64], theta: &[f64]) -> Result<Self> {
        let c = |x: &[f64]| x.iter().map(|&r| C::from(r)).collect();
        StateVector::new(c(u), c(v), c(theta))
    }

    pub fn mode_count(&self) -> usize {
        self.u.len()
    }

    /// `[u, v, theta]` concatenated.
    pub fn to_flat(&self) -> Vec<C> {
        let mut out = Vec::with_capacity(3 * self.mode_count());
        out.extend_from_slice(&self.u);
        out.extend_from_slice(&self.v);
        out.extend_from_slice(&self.theta);
        out
    }

    pub fn from_flat(flat: &[C]) -> Result<Self> {
        if flat.len() % 3 != 0 {
            return Err(invalid(format!("flat state length {} is not a multiple of 3", flat.len())));
        }
        let n = flat.len() / 3;
        Ok(StateVector {
            u: flat[..n].to_vec(),
            v: flat[n..2 * n].to_vec(),
            theta: flat[2 * n..].to_vec(),
        })
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        let d = |a: &[C], b: &[C]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        StateVector { u: d(&self.u, &other.u), v: d(&self.v, &other.v), theta: d(&self.theta, &other.theta) }
    }

    pub fn scale(&self, s: C) -> StateVector {
        let m = |a: &[C]| a.iter().map(|x| x * s).collect();
        StateVector { u: m(&self.u), v: m(&self.v), theta: m(&self.theta) }
    }

    /// `(u_m, v_m, theta_m)` for one mode.
    pub fn mode(&self, m: usize) -> [C; 3] {
        [self.u[m], self.v[m], self.theta[m]]
    }

    pub fn set_mode(&mut self, m: usize, x: [C; 3]) {
        self.u[m] = x[0];
        self.v[m] = x[1];
        self.theta[m] = x[2];
    }
}

#[derive(Clone, Debug)]
pub struct CoupledGenerator {
    bc: BcPair,
    basis_u: ModalBasis,
    basis_theta: ModalBasis,
    coupling: Coupling,
    gram: GramMatrix,
}

impl CoupledGenerator {
    pub fn assemble(bc: BcPair, coupling: Coupling, mode_count: usize, length: f64) -> Result<Self> {
        let basis_u = ModalBasis::new(bc.u, length, mode_count)?;
        let basis_theta = ModalBasis::new(bc.theta, length, mode_count)?;
        let gram = gram(&basis_u, &basis_theta)?;
        Ok(CoupledGenerator { bc, basis_u, basis_theta, coupling, gram })
    }

    pub fn symmetric(bc: BcPair, gamma: f64, mode_count: usize, length: f64) -> Result<Self> {
        Self::assemble(bc, Coupling::symmetric(gamma), mode_count, length)
    }

    pub fn bc(&self) -> BcPair {
        self.bc
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn basis_u(&self) -> &ModalBasis {
        &self.basis_u
    }

    pub fn basis_theta(&self) -> &ModalBasis {
        &self.basis_theta
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn mode_count(&self) -> usize {
        self.basis_u.mode_count()
    }

    pub fn dimension(&self) -> usize {
        3 * self.mode_count()
    }

    pub fn lambda_u(&self) -> &[f64] {
        self.basis_u.eigenvalues()
    }

    pub fn lambda_theta(&self) -> &[f64] {
        self.basis_theta.eigenvalues()
    }

    /// True when both blocks use the same eigenbasis, so the operator splits
    /// into independent 3x3 modal blocks.
    pub fn is_modal(&self) -> bool {
        self.bc.same_basis()
    }

    /// The 3x3 block of zero-based mode `m`; `None` for mixed boundary pairs.
    pub fn modal_block(&self, m: usize) -> Option<ModalBlock> {
        self.is_modal().then(|| ModalBlock {
            lambda_u: self.lambda_u()[m],
            lambda_theta: self.lambda_theta()[m],
            alpha: self.coupling.alpha,
            beta: self.coupling.beta,
        })
    }

    fn check(&self, state: &StateVector) -> Result<()> {
        let n = self.mode_count();
        for len in [state.u.len(), state.v.len(), state.theta.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        Ok(())
    }

    /// Dense coefficient-space matrix.
    pub fn matrix(&self) -> Mat<f64> {
        self.dense(false)
    }

    /// `W A W^{-1}` with `W = diag(Lu^{1/2}, I, I)`; its 2-norm is the energy norm.
    pub fn to_euclidean(&self) -> Mat<f64> {
        self.dense(true)
    }

    fn dense(&self, euclidean: bool) -> Mat<f64> {
        let n = self.mode_count();
        let mut a = Mat::<f64>::zeros(3 * n, 3 * n);
        let Coupling { alpha, beta } = self.coupling;
        for m in 0..n {
            let lu = self.lambda_u()[m];
            let (up, down) = if euclidean { (lu.sqrt(), lu.sqrt()) } else { (1.0, lu) };
            a[(m, n + m)] = up;
            a[(n + m, m)] = -down;
            a[(2 * n + m, 2 * n + m)] = -self.lambda_theta()[m];
            for k in 0..n {
                let g = self.gram.get(m, k);
                if g != 0.0 {
                    a[(n + m, 2 * n + k)] = -alpha * g;
                    a[(2 * n + k, n + m)] = -beta * g;
                }
            }
        }
        a
    }

    /// `<a, b>` in the energy inner product.
    pub fn energy_inner(&self, a: &StateVector, b: &StateVector) -> Result<C> {
        self.check(a)?;
        self.check(b)?;
        let mut acc = C::new(0.0, 0.0);
        for m in 0..self.mode_count() {
            acc += self.lambda_u()[m] * a.u[m] * b.u[m].conj()
                + a.v[m] * b.v[m].conj()
                + a.theta[m] * b.theta[m].conj();
        }
        Ok(acc)
    }

    /// `||A^{1/2} u||^2 + ||v||^2 + ||theta||^2`, which equals the physical energy.
    pub fn energy_norm_sq(&self, state: &StateVector) -> Result<f64> {
        self.check(state)?;
        Ok((0..self.mode_count())
            .map(|m| {
                self.lambda_u()[m] * state.u[m].norm_sqr()
                    + state.v[m].norm_sqr()
                    + state.theta[m].norm_sqr()
            })
            .sum())
    }

    /// `||A'^{1/2} theta||^2`, the instantaneous thermal dissipation.
    pub fn thermal_dissipation(&self, state: &StateVector) -> Result<f64> {
        self.check(state)?;
        Ok(state
            .theta
            .iter()
            .zip(self.lambda_theta())
            .map(|(t, l)| l * t.norm_sqr())
            .sum())
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.check(state)?;
        let n = self.mode_count();
        let Coupling { alpha, beta } = self.coupling;
        let (g_theta, gt_v) = if self.is_modal() {
            (state.theta.clone(), state.v.clone())
        } else {
            let g_theta = (0..n)
                .map(|m| (0..n).map(|k| self.gram.get(m, k) * state.theta[k]).sum())
                .collect::<Vec<C>>();
            let gt_v = (0..n)
                .map(|k| (0..n).map(|m| self.gram.get(m, k) * state.v[m]).sum())
                .collect::<Vec<C>>();
            (g_theta, gt_v)
        };
        let u = state.v.clone();
        let v = (0..n).map(|m| -self.lambda_u()[m] * state.u[m] - alpha * g_theta[m]).collect();
        let theta = (0..n)
            .map(|k| -beta * gt_v[k] - self.lambda_theta()[k] * state.theta[k])
            .collect();
        Ok(StateVector { u, v, theta })
    }

    /// Maps coefficients to Euclidean coordinates `W U`.
    pub fn to_weighted(&self, state: &StateVector) -> Result<Vec<C>> {
        self.check(state)?;
        let mut flat = state.to_flat();
        for (x, l) in flat.iter_mut().zip(self.lambda_u()) {
            *x *= l.sqrt();
        }
        Ok(flat)
    }

    pub fn from_weighted(&self, flat: &[C]) -> Result<StateVector> {
        if flat.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), found: flat.len() });
        }
        let mut state = StateVector::from_flat(flat)?;
        for (x, l) in state.u.iter_mut().zip(self.lambda_u()) {
            *x /= l.sqrt();
        }
        Ok(state)
    }

    /// Solves `(mu I - A) U = F`.
    pub fn solve_shifted(&self, mu: C, rhs: &StateVector) -> Result<StateVector> {
        self.check(rhs)?;
        if self.is_modal() {
            let mut out = StateVector::zeros(self.mode_count());
            for m in 0..self.mode_count() {
                let block = self.modal_block(m).expect("modal generator");
                out.set_mode(m, block.solve_shifted(mu, rhs.mode(m))?);
            }
            return Ok(out);
        }

        let a = linalg::shifted(&self.to_euclidean(), mu);
        let (inv, cond) = linalg::inverse_with_condition(&a);
        let rcond = 1.0 / cond;
        if !(rcond >= 1e-14) {
            return Err(Error::SingularShift { shift: mu, rcond });
        }
        let y = self.to_weighted(rhs)?;
        let mut x = linalg::matvec(&inv, &y);
        // one step of iterative refinement
        let ax = linalg::matvec(&a, &x);
        let r: Vec<C> = y.iter().zip(&ax).map(|(a, b)| a - b).collect();
        let dx = linalg::matvec(&inv, &r);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
        self.from_weighted(&x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BcPair;
    use std::f64::consts::PI;

    fn dense_rows(a: &Mat<f64>) -> Vec<Vec<f64>> {
        (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect()).collect()
    }

    #[test]
    fn single_mode_matrix() {
        let g = CoupledGenerator::symmetric(BcPair::DD, 1.0, 1, PI).unwrap();
        let expected = vec![vec![0.0, 1.0, 0.0], vec![-1.0, 0.0, -1.0], vec![0.0, 1.0, -1.0]];
        let got = dense_rows(&g.matrix());
        for (r, e) in got.iter().zip(&expected) {
            for (a, b) in r.iter().zip(e) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        let eu = dense_rows(&g.to_euclidean());
        assert_eq!(got.len(), eu.len());
        for (r, e) in eu.iter().zip(&expected) {
            for (a, b) in r.iter().zip(e) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn euclidean_form_on_half_interval() {
        let g = CoupledGenerator::symmetric(BcPair::DD, 1.0, 1, PI / 2.0).unwrap();
        let expected = [[0.0, 2.0, 0.0], [-2.0, 0.0, -1.0], [0.0, 1.0, -4.0]];
        let b = g.to_euclidean();
        for i in 0..3 {
            for j in 0..3 {
                assert!((b[(i, j)] - expected[i][j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn decoupled_is_block_diagonal() {
        let g = CoupledGenerator::symmetric(BcPair::DN, 0.0, 4, PI).unwrap();
        let a = g.matrix();
        for i in 0..8 {
            for j in 8..12 {
                assert_eq!(a[(i, j)], 0.0);
                assert_eq!(a[(j, i)], 0.0);
            }
        }
    }

    #[test]
    fn columns_of_single_mode_operator() {
        let g = CoupledGenerator::symmetric(BcPair::DD, 1.0, 1, PI).unwrap();
        let col = |u: f64, v: f64, t: f64| {
            let s = StateVector::from_real(&[u], &[v], &[t]).unwrap();
            let r = g.apply(&s).unwrap();
            [r.u[0].re, r.v[0].re, r.theta[0].re]
        };
        assert_eq!(col(1.0, 0.0, 0.0), [0.0, -1.0, 0.0]);
        assert_eq!(col(0.0, 1.0, 0.0), [1.0, 0.0, 1.0]);
        assert_eq!(col(0.0, 0.0, 1.0), [0.0, -1.0, -1.0]);
    }

    #[test]
    fn energy_of_simple_states() {
        let g = CoupledGenerator::symmetric(BcPair::DD, 1.0, 2, PI).unwrap();
        let s = StateVector::from_real(&[1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((g.energy_norm_sq(&s).unwrap() - 1.0).abs() < 1e-14);
        let s = StateVector::from_real(&[0.0, 0.0], &[3.0, 4.0], &[0.0, 0.0]).unwrap();
        assert!((g.energy_norm_sq(&s).unwrap() - 25.0).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = CoupledGenerator::symmetric(BcPair::DD, 1.0, 3, PI).unwrap();
        let s = StateVector::zeros(2);
        assert!(matches!(g.energy_norm_sq(&s), Err(Error::DimensionMismatch { .. })));
        assert!(g.apply(&s).is_err());
        assert!(g.solve_shifted(C::from(1.0), &s).is_err());
        assert!(StateVector::new(vec![C::from(0.0)], vec![], vec![]).is_err());
    }

    #[test]
    fn shifted_solve_zero_rhs() {
        for bc in BcPair::ALL {
            let g = CoupledGenerator::symmetric(bc, 1.0, 4, PI).unwrap();
            let u = g.solve_shifted(C::from(1.0), &StateVector::zeros(4)).unwrap();
            assert!(g.energy_norm_sq(&u).unwrap() == 0.0);
        }
    }

    #[test]
    fn shifted_solve_unit_shift() {
        let g = CoupledGenerator::symmetric(BcPair::DD, 1.0, 1, PI).unwrap();
        let f = StateVector::from_real(&[0.0], &[1.0], &[0.0]).unwrap();
        let u = g.solve_shifted(C::from(1.0), &f).unwrap();
        assert!((u.u[0] - 0.4).norm() < 1e-15);
        assert!((u.v[0] - 0.4).norm() < 1e-15);
        assert!((u.theta[0] - 0.2).norm() < 1e-15);
    }

    #[test]
    fn singular_shift_in_mixed_case() {
        let g = CoupledGenerator::symmetric(BcPair::DN, 0.0, 3, PI).unwrap();
        let f = StateVector::from_real(&[0.0; 3], &[1.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        let err = g.solve_shifted(C::new(0.0, 2.0), &f);
        assert!(matches!(err, Err(Error::SingularShift { .. })), "{err:?}");
    }

    #[test]
    fn coupling_gamma_detection() {
        assert_eq!(Coupling::symmetric(0.5).gamma(), Some(0.5));
        assert_eq!(Coupling::general(1.0, 2.0).unwrap().gamma(), None);
        assert!(Coupling::general(f64::NAN, 1.0).is_err());
    }
}
