use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("polynomial degree {degree} exceeds moment order {order}")]
    DegreeExceedsOrder { degree: u32, order: u32 },

    #[error("relaxation order {r} too small: need at least {min}")]
    OrderTooSmall { r: u32, min: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("G is not normalized (spectral radius up to {rho:.6} > 1 on the domain); request auto-normalization")]
    Unnormalized { rho: f64 },

    #[error("feasible set is empty")]
    EmptyFeasibleSet,

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("certificate rejected: {0}")]
    CertificateRejected(String),

    #[error("not certifiably nonnegative: {0}")]
    NotNonnegative(String),

    #[error("grid verification failed: {0}")]
    GridVerification(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
