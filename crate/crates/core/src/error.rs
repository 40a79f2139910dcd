use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong inside the estimator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain")]
    Domain { what: &'static str, value: f64 },

    #[error("non-finite input for {what}")]
    NonFinite { what: &'static str },

    #[error("negative importance weight {0}")]
    NegativeWeight(f64),

    #[error("query against an empty stream (t = 0)")]
    EmptyStream,

    #[error("statistics disagree: {0}")]
    Mismatch(&'static str),

    #[error("numerical kernel `{kernel}` failed to converge")]
    KernelFailure { kernel: &'static str },

    #[error("invalid configuration: {0}")]
    Config(&'static str),

    #[error("snapshot decode error: {0}")]
    Decode(&'static str),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }

    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::KernelFailure { .. })
    }
}
