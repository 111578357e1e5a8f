use std::path::PathBuf;

use lsemix::LseError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed document or a value rejected at parse time.
    #[error("spec error at line {line}: {message}")]
    Spec { line: usize, message: String },
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("matrix file error: {0}")]
    Matrix(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] LseError),
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;
