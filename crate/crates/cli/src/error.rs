use std::path::PathBuf;

use eddi::ErrorClass;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Config { path: PathBuf, msg: String },
    #[error("{stage}: {source}")]
    Lib {
        stage: &'static str,
        #[source]
        source: eddi::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Lib { source, .. } => match source.class() {
                ErrorClass::Data => 3,
                ErrorClass::Numerical => 4,
            },
        }
    }
}

/// Attaches the pipeline stage a library error came from.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for eddi::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Lib { stage, source })
    }
}
