use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("bracket parse error at offset {offset}: {message}")]
    Bracket { offset: usize, message: String },
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("pair `{0}` is IT-3 but has no explicit input_map")]
    MissingInputMap(String),
    #[error("pair `{id}` is invalid: {findings}")]
    InvalidPair { id: String, findings: String },
    #[error("pair `{0}` has no gold label")]
    MissingGold(String),
    #[error("{0}")]
    Sweep(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
