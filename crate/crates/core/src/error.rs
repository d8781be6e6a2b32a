use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The shifted operator `mu I - A` is numerically singular.
    #[error("shift {shift} is numerically singular (reciprocal condition estimate {rcond:.3e})")]
    SingularShift { shift: Complex64, rcond: f64 },

    #[error("i*{lambda} is within numerical distance of the spectrum (sigma_min = {sigma_min:.3e})")]
    NearEigenvalue { lambda: f64, sigma_min: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigensolver(String),

    #[error("eigenvector basis is ill-conditioned (condition estimate {condition:.3e}); try a smaller mode count")]
    IllConditioned { condition: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
