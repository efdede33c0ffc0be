use thiserror::Error;

/// Errors produced by the multigrid toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MgError {
    #[error("grid dimension mismatch: expected interior {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("level {0} grid cannot be coarsened")]
    NothingToCoarsen(u32),

    #[error("coarse solve requires a 1x1 interior, got {0}x{0}")]
    NotCoarsest(usize),

    #[error("interior size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("relaxation factor {0} outside (0, 2)")]
    InvalidOmega(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("fixed-point division by zero")]
    DivisionByZero,

    #[error("fixed-point format mismatch: {0} vs {1}")]
    FormatMismatch(String, String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for MgError {
    fn from(e: csv::Error) -> Self {
        MgError::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MgError>;
