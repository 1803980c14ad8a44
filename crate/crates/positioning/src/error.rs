use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("combined datapoint lacks sniffer {0}")]
    Incomplete(u32),
    #[error("feature vector has zero norm")]
    ZeroNorm,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Core(#[from] csisniff_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
