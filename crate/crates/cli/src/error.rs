use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("solver did not converge ({0})")]
    NotConverged(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Output(String),
}

impl CliError {
    /// 0 success, 2 config, 3 solver, 4 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::NotConverged(_) => 3,
            CliError::Io { .. } | CliError::Output(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<fda_waveopt::Error> for CliError {
    fn from(e: fda_waveopt::Error) -> Self {
        match e {
            fda_waveopt::Error::Config { .. } | fda_waveopt::Error::OutOfWindow { .. } | fda_waveopt::Error::Dimension { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Solver(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
