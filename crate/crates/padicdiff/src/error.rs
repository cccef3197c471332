use alloc::string::String;
use core::fmt;

/// Failure modes shared by every module.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    /// A precondition on the inputs was violated; the string names the rule.
    InvalidParameter(String),
    /// The value is outside the domain of the operation (e.g. not in Z_p).
    Domain(String),
    /// Cancellation consumed all tracked digits; retry with at least `suggested`.
    PrecisionExhausted { suggested: u32 },
    /// A verification identity failed on an exact coefficient.
    CheckFailed(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(s) => write!(f, "invalid parameter: {s}"),
            Error::Domain(s) => write!(f, "domain error: {s}"),
            Error::PrecisionExhausted { suggested } => {
                write!(f, "precision exhausted; retry with precision >= {suggested}")
            }
            Error::CheckFailed(s) => write!(f, "check failed: {s}"),
        }
    }
}

impl core::error::Error for Error {}
