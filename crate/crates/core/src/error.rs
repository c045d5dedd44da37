use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("parse error at row {row}, column {column:?}: {reason}")]
    Parse {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),
    #[error("infeasible ratio: {0}")]
    InfeasibleRatio(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("data does not match the training set: {0}")]
    MismatchedData(String),
    #[error("variable index {index} out of range for {p} predictors")]
    Index { index: usize, p: usize },
    #[error("adjustment factor undefined for n = {n}, p = {p}: {reason}")]
    AdjustmentOutOfRange { n: usize, p: usize, reason: String },
}
