use qds_core::Error as CoreError;
use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    /// Classifies a core error raised after the configuration was validated.
    pub fn from_run(e: CoreError) -> Self {
        match e {
            CoreError::Config(_) | CoreError::LengthMismatch(_) => CliError::Config(e.to_string()),
            CoreError::Infeasible(_) | CoreError::SearchExhausted(_) => CliError::Infeasible(e.to_string()),
            CoreError::Domain { .. } | CoreError::Estimation(_) | CoreError::InsufficientCounts { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }

    /// Classifies a core error raised while validating the configuration.
    pub fn from_validation(e: CoreError) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
