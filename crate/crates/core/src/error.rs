//! Crate-wide error type.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty emoji vocabulary: corpus contains no emojis from the emoji table")]
    EmptyVocabulary,

    #[error("no samples: {0}")]
    NoSamples(String),

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("vocabulary checksum mismatch: {artifact} was built against {expected}, got {found}")]
    ChecksumMismatch {
        artifact: String,
        expected: String,
        found: String,
    },

    #[error("external distributions: {0}")]
    ExternalModel(String),

    #[error("training diverged at epoch {epoch}: loss is not finite (try a lower learning rate)")]
    TrainingDiverged { epoch: usize },

    #[error("{0}")]
    InvalidInput(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
