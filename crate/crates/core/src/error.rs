use std::io;

use thiserror::Error;

/// Errors surfaced by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or channel counts of the operands do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument lies outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The operation requires state that is not present (e.g. an empty sample memory).
    #[error("invalid state: {0}")]
    State(String),

    /// A configuration file could not be interpreted.
    #[error("config error: {0}")]
    Config(String),

    /// A binary or text file did not match its expected layout.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        if !$cond {
            return Err($crate::Error::$variant(format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
