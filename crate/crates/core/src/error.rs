use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error classes; the CLI maps these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numerical,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Numerical => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: cannot parse date {value:?} (expected YYYY-MM-DD)")]
    InvalidDate { line: u64, value: String },

    #[error("line {line}, column {column:?}: non-numeric value {value:?}")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },

    #[error("duplicate date {0}")]
    DuplicateDate(String),

    #[error("input: {0}")]
    Input(String),

    #[error("no complete rows remain after dropping rows with missing values")]
    EmptyData,

    #[error("operation requires daily resolution")]
    UnsupportedResolution,

    #[error("invalid operation: {0}")]
    InvalidOperation(String),

    #[error("column not found: {0}")]
    NotFound(String),

    #[error("insufficient data for {context}: need at least {required} rows, have {available}")]
    InsufficientData {
        context: String,
        required: usize,
        available: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("unstable autoregression: companion spectral radius {spectral_radius:.6} >= 1")]
    Unstable { spectral_radius: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model is incompatible with data: missing from data {missing:?}, not in model {unexpected:?}")]
    Incompatible {
        missing: Vec<String>,
        unexpected: Vec<String>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::Contract(_) | Error::InvalidOperation(_) => {
                ErrorCategory::Config
            }
            Error::NonFinite(_)
            | Error::DegenerateFit(_)
            | Error::DegenerateRegression(_)
            | Error::Unstable { .. } => ErrorCategory::Numerical,
            _ => ErrorCategory::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn insufficient(context: impl Into<String>, required: usize, available: usize) -> Self {
        Error::InsufficientData {
            context: context.into(),
            required,
            available,
        }
    }
}
