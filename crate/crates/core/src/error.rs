use thiserror::Error;

/// Errors raised by the estimators, generators and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("time {0} is not a grid node")]
    OffGrid(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("derivative cross-check failed: {0}")]
    DerivativeCheck(String),
    #[error("degenerate statistic: {0}")]
    Degenerate(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
