use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("bound violated in {0} row(s)")]
    Violation(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Violation(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Core errors are configuration problems unless they come from the filesystem.
impl From<dabound_core::Error> for CliError {
    fn from(e: dabound_core::Error) -> Self {
        match e {
            dabound_core::Error::Io(io) => CliError::Io(io.to_string()),
            dabound_core::Error::NonFinite(s) => CliError::Divergence(s),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
