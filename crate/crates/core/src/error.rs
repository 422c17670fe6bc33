use thiserror::Error;

/// Errors raised by model construction, the optimizer and the benchmark harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("evaluation budget of {max} exhausted")]
    BudgetExhausted { max: usize },
    #[error("point lies outside the bound constraints")]
    OutOfBounds,
    #[error("training set is empty")]
    EmptySet,
    #[error("point duplicates an existing training point")]
    DuplicatePoint,
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("derivative {what} is not available for this objective")]
    UnavailableDerivative { what: String },
    #[error("oracle did not provide declared derivative {what}")]
    MissingDerivative { what: String },
    #[error("training set has {actual} points, expected {expected}")]
    WrongSetSize { expected: String, actual: usize },
    #[error("system has {rows} rows but {cols} columns")]
    Underdetermined { rows: usize, cols: usize },
    #[error("system matrix is rank deficient (rank {rank} < {cols})")]
    RankDeficient { rank: usize, cols: usize },
    #[error("operation not defined for system kind {0}")]
    KindMismatch(String),
    #[error("model decrease {0:e} too small for a ratio test")]
    DegenerateModelDecrease(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
