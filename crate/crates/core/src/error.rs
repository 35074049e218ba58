use alloc::string::String;
use core::fmt;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq)]
#[non_exhaustive]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    Domain(String),
    /// The input is admissible in principle but exceeds a configured cap.
    ResourceLimit {
        what: &'static str,
        limit: u64,
    },
    /// The entropy source could not deliver bits.
    Transport(String),
    /// Inputs handed to a record constructor are mutually inconsistent.
    Construction(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn construction(msg: impl Into<String>) -> Self {
        Error::Construction(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::ResourceLimit { what, limit } => {
                write!(f, "resource limit: {what} exceeds cap {limit}")
            }
            Error::Transport(msg) => write!(f, "transport error: {msg}"),
            Error::Construction(msg) => write!(f, "inconsistent record: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;
