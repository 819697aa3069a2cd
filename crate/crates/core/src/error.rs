//! Error type shared by the whole pipeline.
//!
//! Every error carries a class so callers (the CLI in particular) can map
//! failures onto process exit codes without string matching:
//!
//! * [`ErrorClass::Config`] — the caller asked for something nonsensical
//!   (bad flag value, malformed configuration, missing input file).
//! * [`ErrorClass::Data`] — the inputs were readable but their content is
//!   unusable (missing columns, too many malformed rows, infeasible k).
//! * [`ErrorClass::Internal`] — an invariant the library itself promised
//!   was violated; always a bug.

use thiserror::Error;

/// Coarse failure category, used to pick the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Internal,
}

impl ErrorClass {
    /// Conventional process exit code for this class of failure.
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Internal => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::Config => "config",
            ErrorClass::Data => "data",
            ErrorClass::Internal => "internal",
        }
    }
}

#[derive(Debug, Error)]
pub enum CoreError {
    /// A required column is absent from a CSV header.
    #[error("{stream}: missing required column `{column}`")]
    MissingColumn { stream: &'static str, column: String },

    /// More rows failed to parse than the malformed-row tolerance allows.
    #[error(
        "{stream}: {malformed} of {total} rows malformed, over tolerance {tolerance}"
    )]
    TooManyMalformed {
        stream: &'static str,
        malformed: usize,
        total: usize,
        tolerance: f64,
    },

    /// A structurally required game event is missing from the event stream.
    #[error("event stream: no {kind} event present")]
    MissingEvent { kind: &'static str },

    /// A row in a structural stream (events, shots) could not be parsed.
    #[error("{stream} row {row}: {message}")]
    BadRow {
        stream: &'static str,
        row: usize,
        message: String,
    },

    /// Input content is unusable for a reason not tied to one row.
    #[error("{stream}: {message}")]
    BadStream {
        stream: &'static str,
        message: String,
    },

    /// No PERIOD_START at or before a timestamp that needs a period.
    #[error("no period start at or before {timestamp_ms} ms")]
    UnknownPeriod { timestamp_ms: i64 },

    /// An argument value is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration file or run configuration is invalid.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The data cannot support the requested clustering.
    #[error("infeasible clustering: k={k} but only {distinct} distinct points")]
    Infeasible { k: usize, distinct: usize },

    /// Two inputs that must describe the same frames do not line up.
    #[error("misaligned inputs: {0}")]
    Misaligned(String),

    /// An internal invariant was violated; indicates a bug in this crate.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl CoreError {
    pub fn class(&self) -> ErrorClass {
        match self {
            CoreError::InvalidArgument(_) | CoreError::InvalidConfig(_) => ErrorClass::Config,
            CoreError::MissingColumn { .. }
            | CoreError::TooManyMalformed { .. }
            | CoreError::MissingEvent { .. }
            | CoreError::BadRow { .. }
            | CoreError::BadStream { .. }
            | CoreError::UnknownPeriod { .. }
            | CoreError::Infeasible { .. }
            | CoreError::Misaligned(_) => ErrorClass::Data,
            CoreError::Internal(_) => ErrorClass::Internal,
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
