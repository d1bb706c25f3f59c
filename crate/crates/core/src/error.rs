use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bit-width {0} outside the supported range 2..=32")]
    InvalidWidth(u32),

    #[error("value {value} does not fit a {bits}-bit two's-complement word [{min}, {max}]")]
    OutOfRange {
        value: i64,
        bits: u32,
        min: i64,
        max: i64,
    },

    #[error("inner-product length {k} exceeds the limit of {limit}")]
    TooLong { k: usize, limit: usize },

    #[error("invalid LUT factorization: {0}")]
    BadFactorization(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("inconsistent counter state: {0}")]
    InconsistentState(String),

    #[error("accumulator overflow: {0}")]
    Overflow(String),

    #[error("bad magic at offset {offset}: expected \"CBT1\"")]
    MagicMismatch { offset: usize },

    #[error("truncated input at offset {offset}: {what}")]
    Truncated { offset: usize, what: &'static str },

    #[error("element at offset {offset} outside the {dtype} range: {value}")]
    RangeViolation {
        offset: usize,
        dtype: &'static str,
        value: i64,
    },

    #[error("malformed container at offset {offset}: {reason}")]
    Malformed { offset: usize, reason: String },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
