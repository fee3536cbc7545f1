use num_complex::Complex64;
use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("nonfinite kernel value at dtau = {dtau} (eps = {eps})")]
    NumericFailure { dtau: f64, eps: f64 },

    #[error(
        "quadrature did not converge after {refinements} refinements \
         (err {err:.3e} > target {target:.3e}); partial value {partial}"
    )]
    QuadratureNonConvergence {
        refinements: usize,
        err: f64,
        target: f64,
        partial: Complex64,
        /// Per-regulator partial values for diagnosis, as (eps, value) pairs.
        per_eps: Vec<(f64, Complex64)>,
    },

    #[error("effective temperature undefined: {0}")]
    UndefinedTemperature(String),

    #[error("oracle inapplicable: {0}")]
    OracleInapplicable(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
