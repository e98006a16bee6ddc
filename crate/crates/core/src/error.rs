use thiserror::Error;

/// Errors shared by the lattice engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("state {state} out of range for q = {q}")]
    StateOutOfRange { state: usize, q: usize },
    #[error("enumeration of {states} states exceeds the bound {bound}")]
    TooLarge { states: f64, bound: f64 },
    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("unsupported geometry: {0}")]
    Unsupported(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
