use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing column `{0}` in input header")]
    MissingColumn(String),

    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },

    #[error("no score for user {user}, item {item} and no default configured")]
    MissingScore { user: u64, item: u64 },

    #[error("training diverged (non-finite loss at epoch {epoch}); try a smaller learning rate")]
    Divergence { epoch: usize },

    #[error("missing flag for item {item} in recommendation set of user {user}")]
    MissingFlag { user: u64, item: u64 },

    #[error("negative relevance {value} for item {item}")]
    NegativeRelevance { item: u64, value: f64 },

    #[error(
        "alpha {alpha} too small for calibration size {n}: even zero empirical risk \
         yields inflated risk {floor}"
    )]
    AlphaTooSmall { alpha: f64, n: usize, floor: f64 },

    #[error("risk curve must be monotonized before threshold selection")]
    CurveNotMonotonized,

    #[error("unknown column `{column}`; available columns: {available}")]
    UnknownColumn { column: String, available: String },

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
