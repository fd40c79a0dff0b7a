use std::path::PathBuf;

use chrono::{DateTime, Utc};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("timestamps not strictly increasing at row {row}")]
    Ordering { row: usize },

    #[error("data quality: {missing} of {total} grid points missing (limit {limit:.1}%)")]
    Quality {
        missing: usize,
        total: usize,
        limit: f64,
    },

    #[error("weather coverage gap from {from} to {to}")]
    Coverage {
        from: DateTime<Utc>,
        to: DateTime<Utc>,
    },

    #[error("statistic error: {0}")]
    Statistic(String),

    #[error("standardization error: {0}")]
    Standardization(String),

    #[error("empty feature matrix: {0}")]
    EmptyMatrix(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("missing history for lag {lag} at {at}")]
    Horizon { lag: String, at: DateTime<Utc> },

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("model document version {found} does not match reader version {expected}")]
    Version { found: u32, expected: u32 },

    #[error("partition error: {0}")]
    Partition(String),

    #[error("calendar error: {0}")]
    Calendar(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("optimization error: {0}")]
    Optimization(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("span error: {0}")]
    Span(String),

    #[error("policy error: {0}")]
    Policy(String),

    #[error("report error: {0}")]
    Report(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("consumer {consumer}, stage {stage}: {source}")]
    Stage {
        consumer: String,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with the consumer and pipeline stage it came from.
    pub fn at_stage(self, consumer: impl Into<String>, stage: &'static str) -> Self {
        Error::Stage {
            consumer: consumer.into(),
            stage,
            source: Box::new(self),
        }
    }
}
