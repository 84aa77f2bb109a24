use thiserror::Error;

/// Errors raised by the numerics, the semigroup models and the iteration schemes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {dim} outside the supported range 1..={cap}")]
    DimensionOutOfRange { dim: usize, cap: usize },

    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),

    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),

    #[error("matrix is not symmetric (|a_ij - a_ji| = {0:e})")]
    Asymmetric(f64),

    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("Jacobi eigensolver did not converge in {0} sweeps")]
    NoConvergence(usize),

    #[error("point lies outside the domain by {0:e}")]
    OutsideDomain(f64),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid descriptor `{descriptor}`: {reason}")]
    Descriptor { descriptor: String, reason: String },

    #[error("requested {requested} terms but only {available} are recorded")]
    TermOutOfRange { requested: usize, available: usize },

    #[error("{what} cap exceeded: {requested} > {cap}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
