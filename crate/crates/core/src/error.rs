use thiserror::Error;

/// Errors raised by the margin laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("feasible set is not enumerable: {0}")]
    NotEnumerable(String),

    #[error("resource limit: {what} exceeds the enumeration cap of {}", fmt_cap(*cap))]
    ResourceLimit { what: String, cap: u64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

fn fmt_cap(cap: u64) -> String {
    if cap.is_power_of_two() {
        format!("2^{} ({cap})", cap.trailing_zeros())
    } else {
        cap.to_string()
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
