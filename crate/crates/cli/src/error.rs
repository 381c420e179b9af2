use std::path::PathBuf;

use thiserror::Error;

/// Failures grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("missing file: {}", .0.display())]
    Missing(PathBuf),
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Missing(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<meshloop::Error> for CliError {
    fn from(e: meshloop::Error) -> Self {
        use meshloop::Error as E;
        match e {
            E::Io { ref path, ref source } if source.kind() == std::io::ErrorKind::NotFound => CliError::Missing(path.clone()),
            E::Numeric(_) | E::InvisibleComponent { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
