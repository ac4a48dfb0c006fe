use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum DynamoError {
    #[error("shear strength must be an even integer >= 2, got {0}")]
    InvalidAlpha(u32),
    #[error("grid size must be even and positive, got {0}")]
    OddGrid(usize),
    #[error("grid size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("time {0} outside [0, 1]")]
    TimeOutOfRange(f64),
    #[error("zero vector has no cone membership")]
    ZeroVector,
    #[error("direction ({0}, {1}) is outside the stable cone")]
    NotInStableCone(f64, f64),
    #[error("expected a backward region")]
    ExpectedBackwardRegion,
    #[error("diffusivity must be non-negative, got {0}")]
    NegativeDiffusivity(f64),
    #[error("operator requires strictly positive diffusivity")]
    ZeroDiffusivity,
    #[error("eigenvalue modulus {0} does not exceed the contraction factor {1}")]
    EigenvalueTooSmall(f64, f64),
    #[error(
        "fixed-point iteration did not converge after {iters} iterations (residual {residual:e})"
    )]
    NotConverged { iters: usize, residual: f64 },
    #[error("initial field is not divergence-free (relative divergence {0:e})")]
    NotDivergenceFree(f64),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid leaf: {0}")]
    InvalidLeaf(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DynamoError>;
