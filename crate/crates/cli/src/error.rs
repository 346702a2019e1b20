use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Numerical(#[from] chebpint_core::Error),

    #[error("cannot write results: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed results file: {0}")]
    Parse(String),
}

impl CliError {
    /// 0 success, 1 usage or I/O problem, 2 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(chebpint_core::Error::Io(_)) => 1,
            CliError::Numerical(_) => 2,
            CliError::Usage(_) | CliError::Io(_) | CliError::Parse(_) => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
