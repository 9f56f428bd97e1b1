use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch at {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid cost: {0}")]
    InvalidCost(String),
    #[error("{0}")]
    MissingOracle(String),
    #[error("missing posteriors: {0}")]
    MissingPosterior(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid tie: {0}")]
    InvalidTie(String),
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(context: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            got,
        }
    }
}
