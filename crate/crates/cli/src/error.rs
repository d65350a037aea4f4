//! CLI error type carrying the process exit code contract:
//! 2 for validation failures, 3 for numerical-tolerance failures.

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, unknown names, unwritable paths.
    #[error("{0}")]
    Validation(String),

    /// A tolerance was breached during or after computation, or stored
    /// checksums no longer match their files.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<qgyro::Error> for CliError {
    fn from(err: qgyro::Error) -> Self {
        match err {
            qgyro::Error::PositivityViolation { .. } | qgyro::Error::Numerical(_) => {
                Self::Numerical(err.to_string())
            }
            _ => Self::Validation(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self::Validation(format!("I/O error: {err}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
