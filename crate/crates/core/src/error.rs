use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected length {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("dense materialization of {requested} entries exceeds threshold {threshold}")]
    Size { requested: usize, threshold: usize },

    #[error("index out of range: {0}")]
    Index(String),

    #[error("integer accumulation bound {bound} does not fit in i64; shrink the input range")]
    Overflow { bound: u128 },

    #[error("support enumeration needs {required} evaluations, budget is {budget}; use the monte-carlo estimator")]
    Budget { required: u128, budget: u128 },

    #[error("matrix is not symmetric: max |M - M^T| = {0:e}")]
    Asymmetric(f64),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Shape { expected, actual });
    }
    Ok(())
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
