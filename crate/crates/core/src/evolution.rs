//! Exact time evolution of the truncated system and energy traces.
//!
//! Everything runs in Euclidean coordinates `W U`, where the energy is the
//! squared 2-norm. Same-basis generators propagate mode by mode through the
//! 3x3 blocks; mixed generators use one dense eigendecomposition.

use faer::Mat;
use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::generator::{CoupledGenerator, StateVector};
use crate::linalg;
use crate::modal::{expm3, ModalBlock, ModalEigen, C3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub state_norms: Vec<f64>,
    /// Energy norm of `A U0`.
    pub initial_graph_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagation {
    /// Modal blocks when the bases coincide, dense otherwise.
    #[default]
    Auto,
    Modal,
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Sample times on `[t_min, t_max]`. Log spacing needs `t_min > 0`.
pub fn time_grid(t_min: f64, t_max: f64, samples: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if !(t_min.is_finite() && t_max.is_finite()) || t_min < 0.0 || t_max <= t_min {
        return Err(invalid(format!("time window [{t_min}, {t_max}] must satisfy 0 <= t_min < t_max")));
    }
    if samples < 2 {
        return Err(invalid("time grid needs at least 2 samples"));
    }
    let last = (samples - 1) as f64;
    let grid = match spacing {
        Spacing::Linear => (0..samples)
            .map(|i| t_min + (t_max - t_min) * i as f64 / last)
            .collect(),
        Spacing::Log => {
            if t_min <= 0.0 {
                return Err(invalid("log-spaced time grid needs t_min > 0"));
            }
            let (a, b) = (t_min.ln(), t_max.ln());
            (0..samples).map(|i| (a + (b - a) * i as f64 / last).exp()).collect()
        }
    };
    // endpoints exactly as requested
    let mut grid: Vec<f64> = grid;
    grid[0] = t_min;
    grid[samples - 1] = t_max;
    Ok(grid)
}

/// `exp(t M)` for the symmetric modal block `[[0,1,0],[-lam,0,-g],[0,g,-lam]]`.
pub fn modal_propagator(lambda_m: f64, gamma: f64, t: f64) -> Result<C3> {
    if !(lambda_m > 0.0) {
        return Err(invalid(format!("modal eigenvalue must be positive, got {lambda_m}")));
    }
    if !(t >= 0.0) {
        return Err(invalid(format!("time must be non-negative, got {t}")));
    }
    Ok(ModalBlock::symmetric(lambda_m, gamma).propagator(t))
}

enum Block {
    Diagonal { eigen: ModalEigen, coords: [C; 3] },
    Defective { matrix: C3, start: [C; 3] },
}

enum Propagator {
    Modal(Vec<Block>),
    Dense { vectors: Mat<C>, values: Vec<C>, coords: Vec<C> },
}

impl Propagator {
    fn build(gen: &CoupledGenerator, initial: &StateVector, method: Propagation) -> Result<Self> {
        let modal = match method {
            Propagation::Auto => gen.is_modal(),
            Propagation::Modal => {
                if !gen.is_modal() {
                    return Err(invalid(format!(
                        "modal propagation needs a shared eigenbasis, got {}",
                        gen.bc()
                    )));
                }
                true
            }
            Propagation::Dense => false,
        };
        let x0 = gen.to_weighted(initial)?;
        let n = gen.mode_count();
        if modal {
            let blocks = (0..n)
                .map(|m| {
                    let block = gen.modal_block(m).expect("modal generator");
                    let start = [x0[m], x0[n + m], x0[2 * n + m]];
                    match block.eigen() {
                        Some(eigen) => {
                            let coords = eigen.coordinates(start);
                            Block::Diagonal { eigen, coords }
                        }
                        None => Block::Defective {
                            matrix: block.euclidean().map(|r| r.map(C::from)),
                            start,
                        },
                    }
                })
                .collect();
            return Ok(Propagator::Modal(blocks));
        }

        let (values, vectors) = linalg::eigen(&gen.to_euclidean())?;
        let (inv, cond) = linalg::inverse_with_condition(&vectors);
        if !(cond <= 1e10) {
            return Err(Error::IllConditioned { condition: cond });
        }
        let coords = linalg::matvec(&inv, &x0);
        Ok(Propagator::Dense { vectors, values, coords })
    }

    /// Euclidean coordinates at time `t`, laid out as `[u, v, theta]` blocks.
    fn at(&self, t: f64) -> Vec<C> {
        match self {
            Propagator::Modal(blocks) => {
                let n = blocks.len();
                let mut out = vec![C::new(0.0, 0.0); 3 * n];
                for (m, block) in blocks.iter().enumerate() {
                    let x = match block {
                        Block::Diagonal { eigen, coords } => eigen.synthesize(*coords, t),
                        Block::Defective { matrix, start } => {
                            let p = expm3(matrix, t);
                            [0, 1, 2].map(|i| (0..3).map(|k| p[i][k] * start[k]).sum())
                        }
                    };
                    out[m] = x[0];
                    out[n + m] = x[1];
                    out[2 * n + m] = x[2];
                }
                out
            }
            Propagator::Dense { vectors, values, coords } => {
                let scaled: Vec<C> = coords
                    .iter()
                    .zip(values)
                    .map(|(c, s)| c * (s * t).exp())
                    .collect();
                linalg::matvec(vectors, &scaled)
            }
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(invalid("time list is empty"));
    }
    if !(times[0] >= 0.0) {
        return Err(invalid(format!("first time must be non-negative, got {}", times[0])));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("times must be finite and strictly increasing"));
    }
    Ok(())
}

/// States `T(t) U0` at each requested time.
pub fn propagate(
    gen: &CoupledGenerator,
    initial: &StateVector,
    times: &[f64],
    method: Propagation,
) -> Result<Vec<StateVector>> {
    check_times(times)?;
    let prop = Propagator::build(gen, initial, method)?;
    times.par_iter().map(|&t| gen.from_weighted(&prop.at(t))).collect()
}

pub fn evolve(gen: &CoupledGenerator, initial: &StateVector, times: &[f64]) -> Result<EnergyTrace> {
    evolve_with(gen, initial, times, Propagation::Auto)
}

pub fn evolve_with(
    gen: &CoupledGenerator,
    initial: &StateVector,
    times: &[f64],
    method: Propagation,
) -> Result<EnergyTrace> {
    check_times(times)?;
    let initial_graph_norm = gen.energy_norm_sq(&gen.apply(initial)?)?.sqrt();
    let prop = Propagator::build(gen, initial, method)?;
    let energy: Vec<f64> = times
        .par_iter()
        .map(|&t| prop.at(t).iter().map(|z| z.norm_sqr()).sum())
        .collect();
    // t = 0 is reported exactly rather than through V V^{-1}
    let mut energy = energy;
    if times[0] == 0.0 {
        energy[0] = gen.energy_norm_sq(initial)?;
    }
    let state_norms = energy.iter().map(|e| e.sqrt()).collect();
    Ok(EnergyTrace { times: times.to_vec(), energy, state_norms, initial_graph_norm })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongStabilityReport {
    pub monotone: bool,
    pub terminal_ratio: f64,
}

/// Monotonicity (with slack `1e-12 E(0)`) and `E(t_end) / E(0)`.
pub fn strong_stability_report(trace: &EnergyTrace) -> Result<StrongStabilityReport> {
    let (first, last) = match (trace.energy.first(), trace.energy.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(invalid("energy trace is empty")),
    };
    let slack = 1e-12 * first;
    let monotone = trace.energy.windows(2).all(|w| w[1] <= w[0] + slack);
    let terminal_ratio = if first > 0.0 { last / first } else { 0.0 };
    Ok(StrongStabilityReport { monotone, terminal_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BcPair;
    use std::f64::consts::PI;

    #[test]
    fn log_grid_endpoints() {
        let g = time_grid(10.0, 1000.0, 3, Spacing::Log).unwrap();
        assert!((g[0] - 10.0).abs() < 1e-12);
        assert!((g[1] - 100.0).abs() < 1e-10);
        assert!((g[2] - 1000.0).abs() < 1e-9);
        assert!(time_grid(0.0, 1.0, 5, Spacing::Log).is_err());
        assert!(time_grid(1.0, 1.0, 5, Spacing::Linear).is_err());
        assert_eq!(time_grid(0.0, 2.0, 3, Spacing::Linear).unwrap(), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn zero_initial_data() {
        let gen = CoupledGenerator::symmetric(BcPair::DN, 1.0, 6, PI).unwrap();
        let trace = evolve(&gen, &StateVector::zeros(6), &[0.0, 1.0, 10.0]).unwrap();
        assert!(trace.energy.iter().all(|&e| e == 0.0));
        let report = strong_stability_report(&trace).unwrap();
        assert!(report.monotone);
        assert_eq!(report.terminal_ratio, 0.0);
    }

    #[test]
    fn decoupled_heat_mode_decays_exponentially() {
        let n = 4;
        let gen = CoupledGenerator::symmetric(BcPair::DD, 0.0, n, PI).unwrap();
        let mut theta = vec![0.0; n];
        theta[2] = 1.5;
        let init = StateVector::from_real(&[0.0; 4], &[0.0; 4], &theta).unwrap();
        let times = [0.0, 0.01, 0.1, 0.3];
        let trace = evolve(&gen, &init, &times).unwrap();
        for (t, e) in times.iter().zip(&trace.energy) {
            let expected = 2.25 * (-2.0 * 9.0 * t).exp();
            assert!((e - expected).abs() < 1e-13 * 2.25, "{e} vs {expected}");
        }
    }

    #[test]
    fn decoupled_wave_conserves_energy() {
        let gen = CoupledGenerator::symmetric(BcPair::NN, 0.0, 3, PI).unwrap();
        let init = StateVector::from_real(&[0.0, 1.0, 0.0], &[0.5, 0.0, 0.0], &[0.0; 3]).unwrap();
        let trace = evolve(&gen, &init, &[0.0, 5.0, 50.0]).unwrap();
        let report = strong_stability_report(&trace).unwrap();
        assert!((report.terminal_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coupled_run_decays() {
        let gen = CoupledGenerator::symmetric(BcPair::DD, 1.0, 4, PI).unwrap();
        let init = StateVector::from_real(&[1.0, 0.0, 0.0, 0.0], &[0.0; 4], &[0.0; 4]).unwrap();
        let times = time_grid(0.0, 200.0, 50, Spacing::Linear).unwrap();
        let report = strong_stability_report(&evolve(&gen, &init, &times).unwrap()).unwrap();
        assert!(report.monotone);
        assert!(report.terminal_ratio < 1.0);
    }

    #[test]
    fn rejects_bad_times() {
        let gen = CoupledGenerator::symmetric(BcPair::DD, 1.0, 2, PI).unwrap();
        let init = StateVector::zeros(2);
        assert!(evolve(&gen, &init, &[]).is_err());
        assert!(evolve(&gen, &init, &[-1.0, 1.0]).is_err());
        assert!(evolve(&gen, &init, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn modal_method_requires_shared_basis() {
        let gen = CoupledGenerator::symmetric(BcPair::ND, 1.0, 2, PI).unwrap();
        let err = evolve_with(&gen, &StateVector::zeros(2), &[0.0], Propagation::Modal);
        assert!(err.is_err());
    }

    #[test]
    fn modal_propagator_validates() {
        assert!(modal_propagator(0.0, 1.0, 1.0).is_err());
        assert!(modal_propagator(1.0, 1.0, -1.0).is_err());
    }
}
