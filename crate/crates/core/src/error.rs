use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid resolution: {0}")]
    InvalidResolution(String),

    #[error("invalid layer stack: {0}")]
    InvalidLayerStack(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
