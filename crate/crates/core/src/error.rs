use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its allowed range.
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    /// The covariance matrix has no real square root.
    #[error("covariance matrix is not positive semi-definite")]
    NotPositiveSemiDefinite,

    /// The covariance matrix lacks the twin-pair structure.
    #[error("malformed covariance: {0}")]
    Covariance(&'static str),

    #[error("unknown channel name `{0}`")]
    UnknownChannel(String),

    /// A record is shorter than the processing requires.
    #[error("record too short: need {needed} samples, have {available}")]
    Length { needed: usize, available: usize },

    /// The selection window kept no event at all.
    #[error("selection kept no events out of {total}")]
    EmptySelection { total: usize },

    #[error("insufficient statistics: kept {kept} events, need at least {required}")]
    InsufficientStatistics { kept: usize, required: usize },

    #[error("estimation error: {0}")]
    Estimation(&'static str),

    #[error("domain error: {0}")]
    Domain(&'static str),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation { field, reason: reason.into() }
    }
}
