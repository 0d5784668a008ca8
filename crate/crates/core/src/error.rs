use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library.
///
/// Chunk-format failures get their own variants so callers (and the CLI exit
/// codes) can tell a corrupted file from a bad configuration.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape { context: String, expected: String, actual: String },

    #[error("all positions are masked")]
    AllMasked,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {detail}")]
    NonFiniteLoss { epoch: usize, batch: usize, detail: String },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),

    #[error("truncated chunk: {0}")]
    Truncated(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("{path}: {source}")]
    AtPath {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("probe fit failed: {0}")]
    Probe(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn shape(context: impl Into<String>, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape { context: context.into(), expected: expected.to_string(), actual: actual.to_string() }
    }

    pub fn at(path: impl Into<PathBuf>, source: Error) -> Self {
        Error::AtPath { path: path.into(), source: Box::new(source) }
    }

    /// Strips any path context and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPath { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures caused by input data or files rather than by
    /// configuration or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self.root(),
            Error::BadMagic { .. }
                | Error::UnsupportedVersion(_)
                | Error::UnsupportedDtype(_)
                | Error::Truncated(_)
                | Error::InvalidRecord(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::MissingArtifact(_)
                | Error::Shape { .. }
        )
    }
}
