use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {quantity} = {value} ({reason})")]
    Domain {
        quantity: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("no bound states below the channel-1 asymptote {asymptote}; check the potential and grid")]
    NoBoundStates { asymptote: f64 },

    #[error("surviving fractions undefined: total bound population is {total}")]
    UndefinedFraction { total: f64 },

    #[error("numerical failure at t = {time}: {message}")]
    Numerical { time: f64, message: String },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("Floquet spectrum not converged in photon blocks: shift {shift:e} > {tolerance:e}")]
    PhotonConvergence { shift: f64, tolerance: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors that originate in user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::Io { .. } | Error::Parse { .. } | Error::Domain { .. }
        )
    }
}
