use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: parse error: {msg}")]
    Parse { line: u64, msg: String },

    #[error("line {line}: validation error: {msg}")]
    InvalidRow { line: u64, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("unsupported version: model format {found}, expected {expected}")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad input data or arguments, as opposed to
    /// I/O failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
