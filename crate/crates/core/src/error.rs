use std::io;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of a mathematical operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// `q_i > 0` where `p_i = 0`: the divergence is infinite.
    #[error("infinite divergence at index {index}")]
    InfiniteDivergence { index: usize },

    #[error("unknown zone `{0}`")]
    UnknownZone(String),

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("day {date} does not follow training horizon {horizon}")]
    OutOfOrder { date: NaiveDate, horizon: NaiveDate },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model snapshot error: {0}")]
    Snapshot(String),

    #[error("no records for zone `{zone}` on {date}")]
    NoRecords { zone: String, date: NaiveDate },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
