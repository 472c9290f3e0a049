use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("{file}:{line}:{column}: {message}")]
    Parse {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error("did not converge: {0}")]
    NoConvergence(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(..) | CliError::Numerical(_) => 1,
            CliError::Parse { .. } | CliError::Config(_) => 2,
            CliError::NoConvergence(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

/// Library errors that are not input problems.
pub fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}
