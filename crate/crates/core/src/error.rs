use thiserror::Error;

#[derive(Debug, Error)]
pub enum PsrError {
    #[error("row {row}, column `{column}`: {message}")]
    MalformedRow {
        row: usize,
        column: String,
        message: String,
    },

    #[error("row {row}: degenerate interval ({lower}, {upper}]")]
    DegenerateInterval { row: usize, lower: f64, upper: f64 },

    #[error("invalid outcome: {0}")]
    InvalidOutcome(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid interval ({lower}, {upper}]")]
    InvalidInterval { lower: f64, upper: f64 },

    #[error("interval ({lower}, {upper}] has zero probability under the fitted distribution")]
    ZeroProbability { lower: f64, upper: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown stratum `{0}`")]
    UnknownStratum(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PsrError>;
