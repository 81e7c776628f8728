use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("point {0:?} is too close to the boundary of the finite domain")]
    Boundary(Vec<f64>),
    #[error("regular set is empty: {0}")]
    Degenerate(String),
    #[error("non-finite integrand: {0}")]
    NonFinite(String),
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("unbounded envelope: {0}")]
    Unbounded(String),
    #[error("class violation: {0}")]
    Class(String),
    #[error("modes disagree: {0}")]
    Disagreement(String),
    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { key: key.into(), msg: msg.into() }
    }
}
