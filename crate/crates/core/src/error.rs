use std::path::PathBuf;

use chrono::NaiveDate;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{ticker}: duplicate date {date}")]
    DuplicateDate { ticker: String, date: NaiveDate },

    #[error("{ticker}: non-positive price {value} on {date}")]
    NonPositivePrice {
        ticker: String,
        date: NaiveDate,
        value: f64,
    },

    #[error("duplicate ticker {0}")]
    DuplicateTicker(String),

    #[error("no trading dates common to all series")]
    EmptyIntersection,

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("ticker mismatch: expected {expected:?}, got {actual:?}")]
    TickerMismatch {
        expected: Vec<String>,
        actual: Vec<String>,
    },

    #[error("missing {what} for ticker {ticker}")]
    Missing { what: &'static str, ticker: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("zero-variance return column for ticker {0}")]
    DegenerateColumn(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Numerical(_) | Error::Diverged { .. } | Error::DegenerateColumn(_) => {
                ErrorKind::Numerical
            }
            _ => ErrorKind::Data,
        }
    }
}
