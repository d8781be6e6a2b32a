//! Spectral analysis of the weakly coupled thermoelastic wave system
//! `u_tt - u_xx + gamma theta = 0`, `theta_t - theta_xx - gamma u_t = 0`
//! on an interval, under Dirichlet/Neumann boundary conditions for each field.
//!
//! The crate truncates the system to `N` eigenmodes per field and provides
//! exact propagation, spectra, resolvent-norm scans along the imaginary axis
//! and decay-rate fits.

pub mod basis;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod fit;
pub mod generator;
pub mod linalg;
pub mod modal;
pub mod resolvent;
pub mod stability;

pub use basis::{gram, BcPair, BoundaryKind, GramMatrix, ModalBasis};
pub use error::{Error, Result};
pub use evolution::{evolve, EnergyTrace, Propagation, Spacing};
pub use generator::{CoupledGenerator, Coupling, StateVector};
pub use modal::ModalBlock;
pub use resolvent::{ResolventScan, WitnessSolution};
pub use stability::{DecayFit, SpectrumReport};
