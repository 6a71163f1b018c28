use crate::config::ConfigError;

/// Failure classes with their process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<so3_decompound::Error> for CliError {
    fn from(e: so3_decompound::Error) -> Self {
        use so3_decompound::Error as E;
        match e {
            E::Io(_) | E::Parse { .. } => CliError::Io(e.to_string()),
            E::InvalidParameter(_) | E::Domain { .. } | E::MissingPriorBounds => CliError::Config(e.to_string()),
            E::Unnormalized { .. } | E::EmptyObservations | E::NotPositiveDefinite { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}
