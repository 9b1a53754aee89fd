use thiserror::Error;

/// Errors produced by the exponent evaluators and the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("did not converge: {0}")]
    NonConvergence(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("eigensolver: {0}")]
    Eigensolver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
