use thiserror::Error;

#[derive(Debug, Error)]
pub enum LsippError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degree too low: need at least {needed}, got {given}")]
    DegreeTooLow { needed: u32, given: u32 },

    #[error("relaxation order {k} is below the minimum order {min}")]
    OrderTooSmall { k: u32, min: u32 },

    #[error("moment vector of order {have} does not cover order {need}")]
    InsufficientOrder { have: u32, need: u32 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("inconsistent equality constraint (row {row}: 0 = {rhs})")]
    InconsistentEquality { row: usize, rhs: f64 },

    #[error("atom extraction failed: {0}")]
    Extraction(String),

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LsippError>;
