use thiserror::Error;

pub type Result<T> = std::result::Result<T, ZadrError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZadrError {
    #[error("input is empty")]
    EmptyInput,

    #[error("row {row}, column {col}: negative entry {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("row {row}: sum {sum} deviates from 1 by more than {tolerance}")]
    RowSumViolation { row: usize, sum: f64, tolerance: f64 },

    #[error("row {row}: fewer than two strictly positive components")]
    DegenerateRow { row: usize },

    #[error("row {row}: zero entry not allowed in a log-ratio transform")]
    ZeroInTransform { row: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("objective is not finite and step shrinkage could not recover")]
    NonFiniteObjective,

    #[error("design matrix is rank deficient")]
    SingularDesign,

    #[error("need at least {needed} zero-free rows, found {found}")]
    InsufficientRows { needed: usize, found: usize },

    #[error("dataset has no zero-free rows")]
    NoZeroFreeRows,

    #[error("models differ in kind or parameter layout")]
    KindMismatch,

    #[error("likelihood-ratio statistic {0} is negative; fits are not nested or did not converge")]
    NegativeStat(f64),

    #[error("only {successes} bootstrap replicates succeeded, need at least {needed}")]
    TooFewSuccessfulReplicates { successes: usize, needed: usize },

    #[error("ternary output requires exactly three components, got {0}")]
    TernaryRequiresThree(usize),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("json: {0}")]
    Json(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for ZadrError {
    fn from(e: std::io::Error) -> Self {
        ZadrError::Io(e.to_string())
    }
}

impl From<csv::Error> for ZadrError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            ZadrError::Io(e.to_string())
        } else {
            ZadrError::Csv(e.to_string())
        }
    }
}

impl From<serde_json::Error> for ZadrError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            ZadrError::Io(e.to_string())
        } else {
            ZadrError::Json(e.to_string())
        }
    }
}
