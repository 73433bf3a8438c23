use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("physical extent mismatch: {source_mm:?} mm vs {target_mm:?} mm")]
    ExtentMismatch {
        source_mm: [f64; 3],
        target_mm: [f64; 3],
    },

    #[error("blood pool mask has no foreground voxels")]
    EmptyBloodPool,

    #[error("skeleton graph is empty")]
    EmptyGraph,

    #[error("transport masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),

    #[error("config fingerprint mismatch: expected {expected}, found {found}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("template library: {0}")]
    Library(String),

    #[error("confusion matrix: {0}")]
    Metrics(String),

    #[error("unknown CHD type {0:?}")]
    UnknownChdType(String),

    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
