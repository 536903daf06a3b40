use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is missing or invalid. `key` is the dotted path
    /// of the offending setting (e.g. `column_map.timestamp`).
    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("input contains no valid rows ({rejected} rejected)")]
    EmptyInput { rejected: usize },

    #[error("validation error: {0}")]
    Validation(String),

    /// The discovered model cannot be turned into a replayable net.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("unknown output format `{0}` (expected md, json or csv)")]
    UnknownFormat(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
