use thiserror::Error;

/// Errors produced by simulator, dataset, and model operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("unrecognized file magic in {path}")]
    Format { path: String },

    #[error("unsupported format version {found} in {path} (expected {expected})")]
    Version {
        path: String,
        found: u16,
        expected: u16,
    },

    #[error("truncated file {path}: expected {expected} bytes of payload, found {found}")]
    Truncated {
        path: String,
        expected: usize,
        found: usize,
    },

    #[error("inconsistent metadata: {0}")]
    Inconsistent(String),

    #[error("batch norm running statistics are uninitialized; run at least one training batch first")]
    UninitializedBatchNorm,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
