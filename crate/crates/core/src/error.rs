use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Header / schema mismatch while loading or transforming data.
    #[error("schema error: {0}")]
    Schema(String),

    /// A malformed data row, reported with its 1-based line number.
    #[error("row error at line {line}: {msg}")]
    Row { line: usize, msg: String },

    /// An operation precondition was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Training could not be carried out on the given data.
    #[error("fit error: {0}")]
    Fit(String),

    /// Training produced a non-finite loss.
    #[error("training diverged with learning rate {eta}: {msg}")]
    Divergence { eta: f64, msg: String },

    /// Feature count of the input does not match the trained model.
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Bad experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Serialize(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
