use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sample size must be at least 1")]
    ZeroSampleSize,

    #[error("sample is empty")]
    EmptySample,

    #[error("statistic {0} is outside [0, 1]")]
    StatisticOutOfRange(f64),

    #[error("alpha {0} must lie strictly between 0 and 1")]
    InvalidAlpha(f64),

    #[error("probability {0} must lie strictly between 0 and 1")]
    InvalidProbability(f64),

    #[error("value {value} at index {index} is outside [0, 1]")]
    ValueOutOfRange { index: usize, value: f64 },

    #[error("value at index {index} is not finite")]
    NonFinite { index: usize },

    #[error("sample is not sorted at index {index}")]
    Unsorted { index: usize },

    #[error("reference CDF returned {value} for observation {index}; expected a value in [0, 1]")]
    CdfOutOfRange { index: usize, value: f64 },

    #[error("zeta = {zeta} at index {index} is invalid for {family}: {reason}")]
    InvalidZeta {
        index: usize,
        zeta: f64,
        family: String,
        reason: String,
    },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("invalid tabulated family: {0}")]
    Table(String),

    #[error("invalid scenario: {key}: {reason}")]
    Scenario { key: String, reason: String },

    #[error("replicate {replicate}: {source}")]
    Replicate {
        replicate: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
