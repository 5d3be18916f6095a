use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed document: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// A record inside an otherwise well-formed document violates the schema.
    #[error("{path}: {record}: {message}")]
    Schema {
        path: PathBuf,
        record: String,
        message: String,
    },

    #[error("{path}: syntax error: {message}")]
    Parse { path: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid qualified name {0:?}")]
    InvalidName(String),

    #[error("{0}")]
    Internal(String),
}

impl Error {
    /// True when the failure is caused by user-supplied input rather than by
    /// the toolchain or the environment.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Write { .. } | Error::Internal(_))
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, record: impl Into<String>, message: impl ToString) -> Self {
        Error::Schema {
            path: path.into(),
            record: record.into(),
            message: message.to_string(),
        }
    }
}
