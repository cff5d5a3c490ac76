use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("numeric consistency error: {0}")]
    NumericConsistency(String),

    #[error("incomplete measurement set: missing {0}")]
    IncompleteSet(String),

    #[error("non-physical state: {0}")]
    NonPhysical(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Context { source, .. } => source.exit_code(),
            Error::Usage(_) | Error::Parse(_) => 2,
            Error::Io { .. } => 4,
            Error::NumericConsistency(_) | Error::NonPhysical(_) => 3,
            Error::Domain(_)
            | Error::UnsupportedTopology(_)
            | Error::Capacity(_)
            | Error::IncompleteSet(_) => 2,
        }
    }
}
