use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("computation failed: {0}")]
    Computation(#[from] wfock::WfockError),
    #[error("report round-trip mismatch: {0}")]
    RoundTrip(String),
}

impl CliError {
    /// 1 for anything wrong with the inputs, 2 for failures of the run itself.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::Csv { .. } => 1,
            CliError::Computation(_) | CliError::RoundTrip(_) => 2,
        }
    }
}
