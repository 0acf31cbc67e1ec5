use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or inputs that violate an operation's preconditions.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or inconsistent data.
    #[error("data error: {0}")]
    Data(String),

    /// Raw input that is not valid UTF-8.
    #[error("ingestion error: invalid UTF-8 at byte offset {offset}")]
    Ingest { offset: usize },

    #[error("empty vocabulary: every term was filtered out")]
    EmptyVocabulary,

    #[error("domain error: {0}")]
    Domain(String),

    /// The backend could not be reached or kept failing.
    #[error("transport error after {attempts} attempt(s){}: {message}", status.map(|s| format!(" (last status {s})")).unwrap_or_default())]
    Transport {
        attempts: u32,
        status: Option<u16>,
        message: String,
    },

    /// The backend answered, but with nothing usable.
    #[error("content error for record {record_id}: {message}")]
    Content { record_id: String, message: String },

    #[error("persistence error at {}: {source}", path.display())]
    Persistence {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn persistence(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Persistence {
            path: path.into(),
            source,
        }
    }

    /// Whether the failure belongs to the transport/persistence class rather
    /// than to the data or configuration supplied by the caller.
    pub fn is_io_class(&self) -> bool {
        matches!(self, Error::Transport { .. } | Error::Persistence { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
