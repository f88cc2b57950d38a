use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature order {order} cannot resolve degree cap {cap}")]
    GridTooSmall { order: usize, cap: usize },
    #[error("quadrature did not converge: {0}")]
    NoConvergence(String),
    #[error("norm is unbounded: {0}")]
    Unbounded(String),
    #[error("empty result: {0}")]
    Empty(String),
    #[error("incompatible operands: {0}")]
    Incompatible(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
