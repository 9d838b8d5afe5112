use thiserror::Error;

/// Errors surfaced by the library. Variants carry enough context to name the
/// offending line, id, or variable without reaching for a backtrace.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: expected 3 tab-separated fields")]
    MalformedLine { line: usize },

    #[error("input contained no valid triples")]
    EmptyInput,

    #[error("{what} id {id} out of bounds (< {bound} required)")]
    OutOfBounds {
        what: &'static str,
        id: usize,
        bound: usize,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("degenerate training input: {0}")]
    Degenerate(String),

    #[error("relation id {id} selected more than once")]
    DuplicateRelation { id: usize },

    #[error("requested {requested} relations but only {available} exist")]
    TooMany { requested: usize, available: usize },

    #[error("regressor variable {index} is constant (variance < 1e-12)")]
    ConstantRegressor { index: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("covariance is rank-deficient beyond pseudo-inverse repair")]
    SingularWhitening,

    #[error("variable {label} is constant")]
    ConstantVariable { label: String },

    #[error("every row permutation leaves a near-zero diagonal entry")]
    ZeroDiagonal,

    #[error("predictor excess kurtosis {kurtosis} too close to zero")]
    NearGaussianPredictor { kurtosis: f64 },

    #[error("invalid input: {0}")]
    InvalidValue(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
