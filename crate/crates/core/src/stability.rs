//! Spectra, modal root asymptotics and decay-rate fits.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::basis::BcPair;
use crate::error::{invalid, Result};
use crate::evolution::EnergyTrace;
use crate::fit::{line_fit, LineFit};
use crate::generator::{CoupledGenerator, Coupling};
use crate::linalg;
use crate::modal::ModalBlock;

/// Complex number serialized as `{re, im}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<C> for ComplexValue {
    fn from(z: C) -> Self {
        ComplexValue { re: z.re, im: z.im }
    }
}

impl From<ComplexValue> for C {
    fn from(z: ComplexValue) -> Self {
        C::new(z.re, z.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub bc_pair: String,
    pub coupling: Coupling,
    pub mode_count: usize,
    /// Sorted by imaginary part, then real part.
    pub eigenvalues: Vec<ComplexValue>,
    pub spectral_abscissa: f64,
    pub min_distance_to_imaginary_axis: f64,
    /// Real parts within this distance of zero count as on the axis.
    pub axis_tolerance: f64,
    pub on_axis_count: usize,
    pub imaginary_axis_clear: bool,
}

impl SpectrumReport {
    pub fn values(&self) -> Vec<C> {
        self.eigenvalues.iter().map(|&z| z.into()).collect()
    }
}

/// Dense spectrum of the Euclidean form of `gen`.
pub fn spectrum(gen: &CoupledGenerator) -> Result<SpectrumReport> {
    let b = gen.to_euclidean();
    let frob = (0..b.nrows())
        .flat_map(|i| (0..b.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| b[(i, j)] * b[(i, j)])
        .sum::<f64>()
        .sqrt();
    let values = symmetrize_conjugates(linalg::eigenvalues(&b)?, 1e-12 * frob.max(1.0));
    let axis_tolerance = 1e3 * f64::EPSILON * frob.max(1.0);
    Ok(build_report(gen.bc(), gen.coupling(), gen.mode_count(), values, axis_tolerance))
}

fn build_report(
    bc: BcPair,
    coupling: Coupling,
    mode_count: usize,
    mut values: Vec<C>,
    axis_tolerance: f64,
) -> SpectrumReport {
    values.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    let spectral_abscissa = values.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let min_distance_to_imaginary_axis =
        values.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    let on_axis_count = values.iter().filter(|z| z.re.abs() <= axis_tolerance).count();
    let imaginary_axis_clear = values.iter().all(|z| z.re < -axis_tolerance);
    SpectrumReport {
        bc_pair: bc.to_string(),
        coupling,
        mode_count,
        eigenvalues: values.into_iter().map(ComplexValue::from).collect(),
        spectral_abscissa,
        min_distance_to_imaginary_axis,
        axis_tolerance,
        on_axis_count,
        imaginary_axis_clear,
    }
}

/// Pairs each eigenvalue in the upper half plane with its nearest conjugate
/// partner and replaces both by the averaged pair. Near-real values become real.
fn symmetrize_conjugates(values: Vec<C>, tol: f64) -> Vec<C> {
    let mut out = Vec::with_capacity(values.len());
    let mut lower: Vec<Option<C>> = values.iter().filter(|z| z.im < -tol).map(|&z| Some(z)).collect();
    for &z in values.iter().filter(|z| z.im.abs() <= tol) {
        out.push(C::new(z.re, 0.0));
    }
    for &z in values.iter().filter(|z| z.im > tol) {
        let best = lower
            .iter()
            .enumerate()
            .filter_map(|(i, w)| w.map(|w| (i, (w - z.conj()).norm())))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, d)) if d <= tol.max(1e-9 * z.norm()) => {
                let w = lower[i].take().unwrap();
                let avg = 0.5 * (z + w.conj());
                out.push(avg);
                out.push(avg.conj());
            }
            _ => out.push(z),
        }
    }
    out.extend(lower.into_iter().flatten());
    out
}

/// Roots of `s^3 + lam s^2 + (lam + gamma^2) s + lam^2`, the eigenvalues of one
/// symmetric modal block.
pub fn modal_cubic(lambda_m: f64, gamma: f64) -> Result<[C; 3]> {
    if !(lambda_m > 0.0 && lambda_m.is_finite()) {
        return Err(invalid(format!("modal eigenvalue must be positive, got {lambda_m}")));
    }
    if !gamma.is_finite() {
        return Err(invalid("coupling must be finite"));
    }
    Ok(ModalBlock::symmetric(lambda_m, gamma).eigenvalues())
}

/// The root of a modal cubic closest to the imaginary axis.
pub fn wave_branch(roots: &[C; 3]) -> C {
    *roots.iter().max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))).unwrap()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbscissaPoint {
    pub mode_count: usize,
    /// Largest retained eigenvalue `lam_N`.
    pub lambda_max: f64,
    pub spectral_abscissa: f64,
    /// `abscissa * 2 lam_N / gamma^2`; tends to -1. `None` without coupling.
    pub normalized: Option<f64>,
}

/// Spectral abscissa of same-basis truncations for each mode count, from the
/// modal cubics.
pub fn abscissa_asymptotics(
    bc: BcPair,
    coupling: Coupling,
    mode_counts: &[usize],
    length: f64,
) -> Result<Vec<AbscissaPoint>> {
    if !bc.same_basis() {
        return Err(invalid(format!("abscissa asymptotics need a shared eigenbasis, got {bc}")));
    }
    let gamma_sq = -coupling.alpha * coupling.beta;
    mode_counts
        .iter()
        .map(|&n| {
            let gen = CoupledGenerator::assemble(bc, coupling, n, length)?;
            let spectral_abscissa = (0..n)
                .map(|m| wave_branch(&gen.modal_block(m).unwrap().eigenvalues()).re)
                .fold(f64::NEG_INFINITY, f64::max);
            let lambda_max = gen.lambda_u()[n - 1];
            let normalized = (gamma_sq > 0.0).then(|| spectral_abscissa * 2.0 * lambda_max / gamma_sq);
            Ok(AbscissaPoint { mode_count: n, lambda_max, spectral_abscissa, normalized })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    PowerLaw,
    Exponential,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: (f64, f64),
    pub samples_used: usize,
    /// Slope of `log sqrt(E)` against `log t`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub power_fit_residual: f64,
    /// Slope of `log sqrt(E)` against `t`.
    pub exp_rate: f64,
    pub exp_fit_residual: f64,
    /// `-slope`: decay `t^{-p}` of the state norm.
    pub time_decay_exponent: f64,
    /// `-1 / slope`: the resolvent growth order matching decay `t^{-1/alpha}`.
    pub decay_order_alpha: Option<f64>,
    pub preferred_model: DecayModel,
}

/// Ratio by which one model's residual must beat the other's.
pub const MODEL_RATIO: f64 = 10.0;

/// Fits `sqrt(E(t))` on `window` with a power law and with an exponential.
pub fn fit_polynomial_decay(trace: &EnergyTrace, window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    let (first, last) = match (trace.times.first(), trace.times.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(invalid("energy trace is empty")),
    };
    let slack = 1e-12;
    if !(lo > 0.0 && hi > lo) || lo < first * (1.0 - slack) || hi > last * (1.0 + slack) {
        return Err(invalid(format!(
            "fit window [{lo}, {hi}] must be a positive sub-interval of the trace [{first}, {last}]"
        )));
    }
    let mut log_t = Vec::new();
    let mut t_lin = Vec::new();
    let mut log_norm = Vec::new();
    for (&t, &e) in trace.times.iter().zip(&trace.energy) {
        if t >= lo * (1.0 - slack) && t <= hi * (1.0 + slack) {
            if !(e > 0.0) {
                return Err(invalid(format!("energy vanishes at t = {t} inside the fit window")));
            }
            log_t.push(t.ln());
            t_lin.push(t);
            log_norm.push(0.5 * e.ln());
        }
    }
    if log_t.len() < 5 {
        return Err(invalid(format!("fit window holds {} samples; need at least 5", log_t.len())));
    }
    let power: LineFit = line_fit(&log_t, &log_norm)?;
    let expo: LineFit = line_fit(&t_lin, &log_norm)?;
    let preferred_model = if expo.residual >= MODEL_RATIO * power.residual && expo.residual > 0.0 {
        DecayModel::PowerLaw
    } else if power.residual >= MODEL_RATIO * expo.residual && power.residual > 0.0 {
        DecayModel::Exponential
    } else {
        DecayModel::Inconclusive
    };
    Ok(DecayFit {
        window,
        samples_used: log_t.len(),
        slope: power.slope,
        intercept: power.intercept,
        r_squared: power.r_squared,
        power_fit_residual: power.residual,
        exp_rate: expo.slope,
        exp_fit_residual: expo.residual,
        time_decay_exponent: -power.slope,
        decay_order_alpha: (power.slope < 0.0).then(|| -1.0 / power.slope),
        preferred_model,
    })
}

/// Largest time for which a truncation with this spectral abscissa still
/// behaves like the untruncated system.
pub fn pre_asymptotic_limit(spectral_abscissa: f64) -> f64 {
    if spectral_abscissa < 0.0 {
        0.1 / spectral_abscissa.abs()
    } else {
        f64::INFINITY
    }
}

/// Minimum width of a decay-fit window, in decades.
pub const MIN_WINDOW_DECADES: f64 = 1.5;

/// Checks that `window` lies in the pre-asymptotic regime and spans enough decades.
pub fn validate_decay_window(window: (f64, f64), spectral_abscissa: f64) -> Result<()> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(invalid(format!("decay window [{lo}, {hi}] must satisfy 0 < t_lo < t_hi")));
    }
    let limit = pre_asymptotic_limit(spectral_abscissa);
    if hi > limit {
        return Err(invalid(format!(
            "window end {hi} exceeds the pre-asymptotic limit 0.1/|abscissa| = {limit:.6e}; \
             use t_max <= {limit:.6e} or more modes"
        )));
    }
    let decades = (hi / lo).log10();
    if decades < MIN_WINDOW_DECADES {
        return Err(invalid(format!(
            "window spans {decades:.3} decades; need at least {MIN_WINDOW_DECADES}"
        )));
    }
    Ok(())
}
