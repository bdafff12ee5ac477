use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    #[error(transparent)]
    Numerics(#[from] stinecurve::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 0 is success; I/O failures use 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Certification(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::Numerics(e) => match e {
                stinecurve::Error::Certification { .. } => 3,
                stinecurve::Error::NonConvergence(_) => 4,
                _ => 2,
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
