use thiserror::Error;

use crate::filters::Family;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{family} filters are not available with q = {q}")]
    UnsupportedFamilyOrder { family: Family, q: usize },

    #[error("signal length {got} does not match tree size 2^{depth} = {expected}")]
    LengthMismatch {
        depth: u32,
        expected: usize,
        got: usize,
    },

    #[error("invalid wavelet packet tree: {0}")]
    InvalidTree(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("spectral density is singular at frequency {0}")]
    SingularFrequency(f64),

    #[error("quadrature did not reach relative tolerance {tol:e} (estimate {estimate:e}, error {error:e})")]
    QuadratureFailure { tol: f64, estimate: f64, error: f64 },

    #[error("frequency {0} is outside [0, 1/2]")]
    InvalidFrequency(f64),

    #[error("frequency {0} appears more than once")]
    DuplicateFrequency(f64),

    #[error("basis search found no valid cover: {0}")]
    BasisNotFound(String),

    #[error("Durbin-Levinson innovation variance became non-positive at step {step} ({value:e})")]
    NonPositiveDefinite { step: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("zero variance on diagonal entry {0}")]
    ZeroVariance(usize),

    #[error("no coefficient pairs satisfy the support condition: {0}")]
    InsufficientPairs(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of numerical routines, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure { .. }
                | Error::NonPositiveDefinite { .. }
                | Error::ZeroVariance(_)
                | Error::BasisNotFound(_)
                | Error::InsufficientPairs(_)
        )
    }
}
