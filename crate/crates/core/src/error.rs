use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{source_name}:{line}: invalid UTF-8")]
    InvalidUtf8 { source_name: String, line: usize },

    /// A malformed line in one of the tab-separated input formats.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {field}: {message}")]
    Config { field: String, message: String },

    #[error("tokenizer mismatch: tagger was trained with `{expected}`, got `{found}`")]
    TokenizerMismatch { expected: String, found: String },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}: already exists (pass --force to overwrite)", path.display())]
    OutputExists { path: PathBuf },

    #[error("{}: built from config {found}, current config is {expected} (pass --mixed to combine)", path.display())]
    ProvenanceMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{}: output directory is locked by another run (delete the lock file if that run is gone)", path.display())]
    Locked { path: PathBuf },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit status: 2 for configuration problems, 3 for bad or
    /// missing data, 4 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Internal(_) => 4,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
