use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what}: budget of {cap} search nodes exceeded")]
    BudgetExceeded { what: &'static str, cap: u64 },
    #[error("internal error: {0}")]
    Internal(String),
    #[error("inconsistent ends descriptor: {0}")]
    InconsistentDescriptor(String),
    #[error("descriptor is not admissible: {0}")]
    NotAdmissible(String),
    #[error("descriptor does not determine a surface type: {0}")]
    Ambiguous(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
