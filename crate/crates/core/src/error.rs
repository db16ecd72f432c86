use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dump root not found: {0}")]
    RootNotFound(PathBuf),

    #[error("no publication part files found under {0}")]
    EmptyLayout(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: corrupt compressed stream after line {lines_read}: {message}")]
    CorruptCompression {
        path: PathBuf,
        lines_read: u64,
        message: String,
    },

    #[error("invalid OpenAIRE id: {0}")]
    InvalidOpenAireId(String),

    #[error("node id {0} outside the int32 range")]
    NodeIdOutOfRange(u64),

    #[error("node id space exhausted at {0} entries")]
    IdSpaceExhausted(usize),

    #[error("translation table format error at line {line}: {message}")]
    IdMapFormat { line: u64, message: String },

    #[error("edge endpoint {endpoint} out of range for {node_count} nodes")]
    EndpointOutOfRange { endpoint: i64, node_count: usize },

    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("{path}: malformed CSV: {message}")]
    MalformedCsv { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attaches a path to a bare `io::Error`.
pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|e| Error::io(path, e))
    }
}
