use std::io;

use thiserror::Error;

/// Every failure the library can report.
///
/// Each variant maps to a stable short code (see [`ToraError::code`]) that the
/// command-line driver prints on standard error, so callers can classify
/// failures without parsing messages.
#[derive(Debug, Error)]
pub enum ToraError {
    #[error("malformed array file: {0}")]
    Format(String),

    #[error("array payload length mismatch: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("unsupported array layout: {0}")]
    UnsupportedLayout(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("numerical failure at timestep {timestep}, block {block}: {detail}")]
    NumericalFailure {
        timestep: usize,
        block: usize,
        detail: String,
    },
}

impl ToraError {
    /// Stable machine-readable code for this error kind.
    pub fn code(&self) -> &'static str {
        match self {
            ToraError::Format(_) => "format_error",
            ToraError::Truncated { .. } => "truncation_error",
            ToraError::UnsupportedLayout(_) => "unsupported_layout",
            ToraError::Io { .. } => "io_error",
            ToraError::Validation(_) => "validation_error",
            ToraError::DegenerateInput(_) => "degenerate_input",
            ToraError::Configuration(_) => "configuration_error",
            ToraError::NumericalFailure { .. } => "numerical_failure",
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        ToraError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = ToraError> = std::result::Result<T, E>;

macro_rules! validation {
    ($($arg:tt)*) => {
        $crate::error::ToraError::Validation(format!($($arg)*))
    };
}

macro_rules! degenerate {
    ($($arg:tt)*) => {
        $crate::error::ToraError::DegenerateInput(format!($($arg)*))
    };
}

pub(crate) use degenerate;
pub(crate) use validation;
