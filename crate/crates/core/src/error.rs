use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite {term} at step {step}")]
    NonFinite { step: u64, term: &'static str },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("checkpoint: {0}")]
    Checkpoint(#[from] crate::train::checkpoint::CheckpointError),

    #[error(transparent)]
    Frame(#[from] crate::codec::frame::FrameError),

    #[error("capacity exceeded: message needs {required} bits, cover holds {available} bits")]
    Capacity { required: usize, available: usize },

    #[error("unsupported output format for {path}: {reason}")]
    OutputFormat { path: PathBuf, reason: String },

    #[error("image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
