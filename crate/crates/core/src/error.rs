use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quarter {quarter} of year {year} is outside 1..=4")]
    MalformedQuarter { year: i32, quarter: i64 },

    #[error("duplicate variable `{0}` in schema")]
    DuplicateVariable(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate panel key ({company}, {quarter})")]
    DuplicateKey { company: String, quarter: String },

    #[error("missing denominator variable `{0}` required by a ratio format")]
    MissingDenominator(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("window too small: {available} distinct quarters, need at least {required}")]
    WindowTooSmall { available: usize, required: usize },

    #[error("insufficient history: {available} quarters, need at least {required}")]
    InsufficientHistory { available: usize, required: usize },

    #[error("all {0} search trials failed")]
    AllTrialsFailed(usize),

    #[error("subset {index}: {source}")]
    Subset {
        index: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    pub fn in_subset(self, index: usize) -> Self {
        Error::Subset {
            index,
            source: alloc::boxed::Box::new(self),
        }
    }
}
