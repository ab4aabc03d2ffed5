use thiserror::Error;

/// Failure classes, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config, flags or input files.
    #[error("invalid input: {0}")]
    Schema(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 3,
            CliError::Precondition(_) => 4,
            CliError::Numerical(_) => 5,
            CliError::Io(_) => 6,
        }
    }
}

impl From<cohradar_core::Error> for CliError {
    fn from(e: cohradar_core::Error) -> Self {
        use cohradar_core::Error as E;
        match e {
            E::IndexOutOfRange { .. } | E::InvalidParameter { .. } | E::Parse { .. } => CliError::Schema(e.to_string()),
            E::Precondition(_) => CliError::Precondition(e.to_string()),
            E::OutsideWindow { .. } | E::Domain(_) | E::EstimationFailed(_) => CliError::Numerical(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
