use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid spin value {0}, expected +1 or -1")]
    InvalidSpin(i64),

    #[error("invalid key bit {0}, expected 0 or 1")]
    InvalidBit(i64),

    #[error("invalid coupling ({0}, {0})")]
    SelfCoupling(usize),

    #[error("duplicate entry {0}")]
    DuplicateEntry(String),

    #[error("problem too large for enumeration: n = {n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("embedding capacity exceeded: {requested} variables, at most {capacity}")]
    Capacity { requested: usize, capacity: usize },

    #[error("energy integrity check failed for sample {index}: stored {stored}, recomputed {recomputed}")]
    Integrity { index: usize, stored: f64, recomputed: f64 },

    #[error("empty sample set")]
    Empty,

    #[error("remote error {code}: {message}")]
    Remote { code: u16, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
