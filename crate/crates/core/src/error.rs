use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv")]
    Csv(#[from] csv::Error),

    #[error("column {0} not found in header")]
    MissingColumn(String),

    #[error("missing value at row {row}")]
    MissingValue { row: usize },

    #[error("non-numeric value {value:?} at row {row}")]
    NonNumeric { row: usize, value: String },

    #[error("need at least {needed} valid rows, found {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("series has {len} values but {needed} are required")]
    SeriesTooShort { len: usize, needed: usize },

    #[error("insufficient history for window ending at t={t}: need {min} <= t <= {max}")]
    InsufficientHistory { t: usize, min: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigendecomposition failed")]
    Eigendecomposition,

    #[error("eigenvalue sets differ in size: {0} vs {1}")]
    CardinalityMismatch(usize, usize),

    #[error("mode matrices differ in shape: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),

    #[error("signature at t={0} is fallback-flagged and cannot be compared")]
    FallbackSignature(usize),

    #[error("out-of-order insert: t'={t_prime} is not after the latest stored t'={latest}")]
    OutOfOrder { t_prime: usize, latest: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no evaluable points")]
    EmptyEvaluation,

    #[error("malformed json")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
