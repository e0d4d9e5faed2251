use std::fmt;

/// Library-wide error type.
///
/// The three variants map onto the CLI exit-code contract: domain and
/// hypothesis violations exit with 2, capacity errors with 3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    Domain(String),
    /// A stated hypothesis of the result being exercised does not hold
    /// (e.g. a modulus with a prime factor that is not below `y'`).
    Hypothesis(String),
    /// The request exceeds a configured resource budget; the message names
    /// the limit that was hit.
    Capacity(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn hypothesis(msg: impl Into<String>) -> Self {
        Error::Hypothesis(msg.into())
    }

    pub fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Hypothesis(m) => write!(f, "hypothesis violation: {m}"),
            Error::Capacity(m) => write!(f, "capacity error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
