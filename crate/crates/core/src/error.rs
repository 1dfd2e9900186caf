use thiserror::Error;

/// Errors produced by the QAOA library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QaoaError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("bitstring length {got} does not match instance size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("instance with {n} vertices exceeds the limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty counts")]
    EmptyCounts,

    #[error("optimum cut value is zero; accuracy is undefined")]
    ZeroOptimum,
}

pub type Result<T> = std::result::Result<T, QaoaError>;
