use thiserror::Error;

/// Errors produced anywhere in the mapping pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed program: {0}")]
    MalformedProgram(String),

    #[error("malformed architecture: {0}")]
    MalformedArch(String),

    #[error("invalid encoding options: {0}")]
    InvalidOptions(String),

    #[error("operation requires a line architecture, got {0}")]
    NotALine(String),

    #[error("unknown edge id {0}")]
    UnknownEdge(usize),

    #[error("solver backend failure: {0}")]
    Backend(String),

    #[error("solver timed out (certified depth floor: {certified_floor})")]
    Timeout { certified_floor: usize },

    #[error("model is incomplete or out of range: {0}")]
    BadModel(String),

    #[error("solution failed verification: {0} violation(s)")]
    Invalid(usize),

    #[error("instance exceeds exhaustive-search cap: {0}")]
    CapExceeded(String),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid metrics query: {0}")]
    InvalidMetrics(String),

    #[error("no solution found within horizon cap {0}")]
    HorizonExhausted(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
