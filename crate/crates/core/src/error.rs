use thiserror::Error;

/// Errors raised by the estimators and their inputs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("oracle too large: {size} points exceeds the exact threshold {threshold}")]
    OracleTooLarge { size: usize, threshold: usize },

    #[error("{cap} cap exceeded: {required} required, limit {limit}")]
    CapExceeded {
        cap: &'static str,
        required: f64,
        limit: usize,
    },

    #[error("group mismatch: rank {left} vs rank {right}")]
    GroupMismatch { left: usize, right: usize },

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("grid too short: {len} values, at least {min} required")]
    GridTooShort { len: usize, min: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("insufficient window: bracket log-width {width} exceeds tolerance {tolerance}")]
    InsufficientWindow { width: f64, tolerance: f64 },

    #[error("unsupported metric kind for this operation: {0}")]
    UnsupportedMetric(String),

    #[error("net resolution {resolution} is coarser than {required} (a quarter of the smallest query scale)")]
    ResolutionTooCoarse { resolution: f64, required: f64 },

    #[error("bisection failed: {0}")]
    Bisection(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
