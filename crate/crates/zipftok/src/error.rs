use std::path::PathBuf;

use thiserror::Error;

use crate::powerfit::AdditiveMixtureFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by corpus streaming, training, fitting, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("undecodable byte sequence at byte offset {offset} in {path}")]
    Decode { path: PathBuf, offset: u64 },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("symbol {symbol:?} at char offset {offset} is not in the training alphabet")]
    OutOfAlphabet { symbol: char, offset: usize },

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("invalid record at line {line}, field `{field}`: {msg}")]
    Validation {
        line: u64,
        field: &'static str,
        msg: String,
    },

    #[error("fit did not converge: {msg}")]
    FitFailure {
        msg: String,
        /// Best parameters found before giving up.
        partial: Box<AdditiveMixtureFit>,
    },
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub fn consistency(msg: impl Into<String>) -> Self {
        Error::Consistency(msg.into())
    }
}
