use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An exact enumeration would exceed the configured cap.
    #[error("enumeration of {needed} configurations exceeds the cap of {cap}; use the Monte Carlo path")]
    Capacity { needed: u128, cap: u64 },

    #[error("dimension mismatch: expected d = {expected}, got d = {got}")]
    DimensionMismatch { expected: u8, got: u8 },

    #[error("site {0} is outside the supported range")]
    OutOfRange(String),

    /// Conditioning on an event of probability zero.
    #[error("conditioning event has zero mass: {0}")]
    DegenerateConditioning(String),

    #[error("conditional at slot {slot} needs neighbour slot {missing}, which is unassigned")]
    UnassignedNeighbor { slot: usize, missing: usize },

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("outcome spaces differ: {left} vs {right}")]
    MismatchedSpaces { left: usize, right: usize },

    /// A numerical self-check did not hold.
    #[error("self-check failed: {0}")]
    CheckFailed(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
