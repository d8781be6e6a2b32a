//! Resolvent norms `||(i lam I - A)^{-1}||` along the imaginary axis.
//!
//! Norms are taken in the energy norm, computed as `1 / sigma_min(i lam I - B)`
//! for the Euclidean form `B`. The explicit witness solutions show that these
//! norms blow up like `lam^2` at `lam = sqrt(lam_m)`.

use faer::Mat;
use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BcPair, BoundaryKind, ModalBasis};
use crate::error::{invalid, Error, Result};
use crate::fit::line_fit;
use crate::generator::{CoupledGenerator, Coupling, StateVector};
use crate::linalg;

/// `sigma_min / sigma_max` below which a shift counts as an eigenvalue.
pub const SINGULAR_THRESHOLD: f64 = 1e-14;

/// Default distance in imaginary part at which scan points are flagged.
pub const DEFAULT_FLAG_TOLERANCE: f64 = 1e-6;

fn extremes(gen: &CoupledGenerator, lambda: f64) -> Result<(f64, f64)> {
    let mu = C::new(0.0, lambda);
    if !gen.is_modal() {
        return linalg::singular_extremes(&linalg::shifted(&gen.to_euclidean(), mu));
    }
    let mut smax: f64 = 0.0;
    let mut smin = f64::INFINITY;
    for m in 0..gen.mode_count() {
        let b = gen.modal_block(m).unwrap().euclidean();
        let a = Mat::from_fn(3, 3, |i, j| {
            let d = if i == j { mu } else { C::new(0.0, 0.0) };
            d - b[i][j]
        });
        let (hi, lo) = linalg::singular_extremes(&a)?;
        smax = smax.max(hi);
        smin = smin.min(lo);
    }
    Ok((smax, smin))
}

/// `||(i lambda I - A)^{-1}||` in the energy norm.
pub fn resolvent_norm(gen: &CoupledGenerator, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(invalid(format!("spectral parameter must be finite, got {lambda}")));
    }
    let (smax, smin) = extremes(gen, lambda)?;
    if !(smin > SINGULAR_THRESHOLD * smax) {
        return Err(Error::NearEigenvalue { lambda, sigma_min: smin });
    }
    Ok(1.0 / smin)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventScan {
    pub bc_pair: BcPair,
    pub coupling: Coupling,
    pub mode_count: usize,
    pub lambdas: Vec<f64>,
    /// `+inf` where the shift is numerically singular.
    pub norms: Vec<f64>,
    pub flagged: Vec<bool>,
    pub flag_tolerance: f64,
}

impl ResolventScan {
    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }
}

/// Imaginary parts of the truncated spectrum.
fn spectrum_imag(gen: &CoupledGenerator) -> Result<Vec<f64>> {
    if gen.is_modal() {
        Ok((0..gen.mode_count())
            .flat_map(|m| gen.modal_block(m).unwrap().eigenvalues())
            .map(|z| z.im)
            .collect())
    } else {
        Ok(linalg::eigenvalues(&gen.to_euclidean())?.iter().map(|z| z.im).collect())
    }
}

pub fn scan(gen: &CoupledGenerator, lambdas: &[f64]) -> Result<ResolventScan> {
    scan_with_tolerance(gen, lambdas, DEFAULT_FLAG_TOLERANCE)
}

/// Resolvent norms on a grid. A point is flagged when it lies within
/// `flag_tolerance` of an eigenvalue's imaginary part or the shift is singular.
pub fn scan_with_tolerance(
    gen: &CoupledGenerator,
    lambdas: &[f64],
    flag_tolerance: f64,
) -> Result<ResolventScan> {
    if lambdas.is_empty() {
        return Err(invalid("resolvent scan needs at least one spectral parameter"));
    }
    let imag = spectrum_imag(gen)?;
    let rows: Vec<(f64, bool)> = lambdas
        .par_iter()
        .map(|&lambda| {
            let near = imag.iter().any(|im| (lambda - im).abs() < flag_tolerance);
            match resolvent_norm(gen, lambda) {
                Ok(norm) => Ok((norm, near)),
                Err(Error::NearEigenvalue { .. }) => Ok((f64::INFINITY, true)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    Ok(ResolventScan {
        bc_pair: gen.bc(),
        coupling: gen.coupling(),
        mode_count: gen.mode_count(),
        lambdas: lambdas.to_vec(),
        norms: rows.iter().map(|r| r.0).collect(),
        flagged: rows.iter().map(|r| r.1).collect(),
        flag_tolerance,
    })
}

/// `lam = sqrt(lam_m)` of the displacement basis for one-based `m` in `lo..=hi`.
pub fn mode_grid(gen: &CoupledGenerator, lo: usize, hi: usize) -> Result<Vec<f64>> {
    if lo == 0 || hi < lo || hi > gen.mode_count() {
        return Err(invalid(format!(
            "mode range {lo}..={hi} must lie within 1..={}",
            gen.mode_count()
        )));
    }
    Ok((lo..=hi).map(|m| gen.lambda_u()[m - 1].sqrt()).collect())
}

/// Closed-form resolvent solution for `F = (0, e_m, 0)` at `lam = sqrt(lam_m)`,
/// with `u = a e_m` and `theta = b e_m'`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSolution {
    pub bc_pair: BcPair,
    /// One-based mode index.
    pub mode_index: usize,
    pub lambda: f64,
    pub a: (f64, f64),
    pub b: (f64, f64),
    /// `lam_m |a|^2`, the `D(A^{1/2})` norm of `u`.
    pub energy_norm_sq_u: f64,
    /// False for the mixed pairs, where the ansatz is only a heuristic.
    pub exact: bool,
}

impl WitnessSolution {
    pub fn a(&self) -> C {
        C::new(self.a.0, self.a.1)
    }

    pub fn b(&self) -> C {
        C::new(self.b.0, self.b.1)
    }

    /// The witness as a state on `n` modes. Only meaningful for exact cases.
    pub fn state(&self, n: usize) -> Result<StateVector> {
        if !self.exact {
            return Err(invalid(format!("the {} witness is not an exact resolvent solution", self.bc_pair)));
        }
        if self.mode_index > n {
            return Err(invalid(format!("mode {} exceeds the truncation {n}", self.mode_index)));
        }
        let mut s = StateVector::zeros(n);
        let m = self.mode_index - 1;
        s.u[m] = self.a();
        s.v[m] = C::new(0.0, self.lambda) * self.a();
        s.theta[m] = self.b();
        Ok(s)
    }

    /// Full energy norm squared `lam_m |a|^2 + lam^2 |a|^2 + |b|^2`.
    pub fn energy_norm_sq(&self) -> f64 {
        let a2 = self.a().norm_sqr();
        self.energy_norm_sq_u + self.lambda * self.lambda * a2 + self.b().norm_sqr()
    }
}

pub fn witness(bc: BcPair, m: usize, gamma: f64, length: f64) -> Result<WitnessSolution> {
    if gamma == 0.0 || !gamma.is_finite() {
        return Err(invalid("witness solutions require a nonzero coupling gamma"));
    }
    if m == 0 {
        return Err(invalid("witness mode index is one-based"));
    }
    let lam_u = ModalBasis::new(bc.u, length, m)?.eigenvalues()[m - 1];
    let lam_t = ModalBasis::new(bc.theta, length, m)?.eigenvalues()[m - 1];
    let g2 = gamma * gamma;
    let b = C::new(1.0 / gamma, 0.0);
    use BoundaryKind::*;
    let (a, exact) = match (bc.u, bc.theta) {
        (Dirichlet, Dirichlet) | (Neumann, Neumann) => (C::new(1.0, -lam_u.sqrt()) / g2, true),
        // mixed pairs: heuristic formulas for u = a phi_m, theta = b xi_m
        (Dirichlet, Neumann) | (Neumann, Dirichlet) => {
            (C::new((1.0 + lam_u * lam_u / lam_t).sqrt() / g2, 0.0), false)
        }
    };
    Ok(WitnessSolution {
        bc_pair: bc,
        mode_index: m,
        lambda: lam_u.sqrt(),
        a: (a.re, a.im),
        b: (b.re, b.im),
        energy_norm_sq_u: lam_u * a.norm_sqr(),
        exact,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares slope of `log r` against `log lam` over `window` (scan indices).
pub fn growth_exponent(scan: &ResolventScan, window: std::ops::Range<usize>) -> Result<GrowthFit> {
    if window.end > scan.lambdas.len() || window.start >= window.end {
        return Err(invalid(format!(
            "fit window {window:?} outside scan of {} points",
            scan.lambdas.len()
        )));
    }
    if window.len() < 5 {
        return Err(invalid(format!("growth fit needs at least 5 points, got {}", window.len())));
    }
    let lambdas = &scan.lambdas[window.clone()];
    let norms = &scan.norms[window];
    if let Some(l) = lambdas.iter().find(|&&l| !(l > 0.0)) {
        return Err(invalid(format!("growth fit needs positive spectral parameters, got {l}")));
    }
    if let Some(r) = norms.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(invalid(format!("growth fit needs finite resolvent norms, got {r}")));
    }
    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|r| r.ln()).collect();
    let f = line_fit(&xs, &ys)?;
    Ok(GrowthFit { slope: f.slope, intercept: f.intercept, r_squared: f.r_squared, points: xs.len() })
}
