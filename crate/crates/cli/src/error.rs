use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("state encoding: {0}")]
    Encoding(String),
    #[error("seed {seed}, {algorithm}, t0 = {t0}, round {round}: {source}")]
    Replication {
        seed: u64,
        algorithm: String,
        t0: usize,
        round: u64,
        #[source]
        source: olin_core::Error,
    },
    #[error(transparent)]
    Core(#[from] olin_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
