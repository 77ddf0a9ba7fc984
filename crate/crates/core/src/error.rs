use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("index out of range: {what} {index} >= {bound}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },
    /// Enumeration would exceed its budget; `required` is the size it needed.
    #[error("enumeration guard exceeded: {what} needs {required:.3e} terms, limit is {limit:.3e}")]
    GuardExceeded {
        what: &'static str,
        required: f64,
        limit: f64,
    },
    #[error("estimate undefined: every importance weight is zero")]
    AllWeightsZero,
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
