use thiserror::Error;

use crate::lattice::LatticePoint;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every computation in the crate.
///
/// The variants map one-to-one onto the CLI exit codes (see [`Error::exit_code`]).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("vertex {point} has no outgoing edge")]
    Structural { point: LatticePoint },

    #[error("numeric failure: {message}")]
    Numeric {
        message: String,
        /// Best value available when the failure was detected, if any.
        partial: Option<f64>,
        /// Free-form diagnostic rows (extrapolation tables, panel counts...).
        diagnostics: Vec<String>,
    },

    /// A Monte Carlo run finished but its output cannot be trusted
    /// (truncation or rejection rates out of bounds).
    #[error("simulation diagnostic: {0}")]
    Diagnostic(String),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric {
            message: msg.into(),
            partial: None,
            diagnostics: Vec::new(),
        }
    }

    pub fn numeric_with(msg: impl Into<String>, partial: Option<f64>, diagnostics: Vec<String>) -> Self {
        Error::Numeric {
            message: msg.into(),
            partial,
            diagnostics,
        }
    }

    /// Process exit code used by the `owk` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Structural { .. } => 1,
            Error::Numeric { .. } | Error::Diagnostic(_) => 2,
        }
    }
}
