use thiserror::Error;

/// Errors raised by the model, solvers and checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: String,
        expected: String,
        found: String,
    },

    #[error("{what}[{index}] = {value} is negative")]
    NegativeProbability {
        what: String,
        index: usize,
        value: f64,
    },

    #[error("{what} sums to {sum}, which is off the simplex by more than {tolerance:e}")]
    NotOnSimplex {
        what: String,
        sum: f64,
        tolerance: f64,
    },

    #[error("{what} contains a non-finite entry at {location}")]
    NonFinite { what: String, location: String },

    #[error(
        "alpha = {0} is outside (0, 1]; alpha = 0 is the state-action limit, \
         whose optimal policy is not unique"
    )]
    AlphaOutOfRange(f64),

    #[error("lambda = {0} must be a finite positive number")]
    LambdaNotPositive(f64),

    #[error("{0} is empty after removing zero-probability entries")]
    EmptyAfterPruning(String),

    #[error("duplicate {what} label {label:?}")]
    DuplicateLabel { what: String, label: String },

    #[error("marginal must be strictly positive, found {value} at index {index}")]
    NonPositiveMarginal { index: usize, value: f64 },

    #[error("{what} {index} carries zero mass")]
    ZeroMass { what: String, index: usize },

    #[error("coupling is not Bayes plausible: column marginal deviates from mu by {deviation:e}")]
    NotBayesPlausible { deviation: f64 },

    #[error("surprisal is undefined at ({row}, {col})")]
    UndefinedSurprisal { row: usize, col: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance too large for the brute-force oracle: n*m = {size} > {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("instances of an entry pair differ in {0}")]
    SharedFieldMismatch(String),

    #[error("double ratio for ({first}, {second}) is not constant across states (deviation {deviation:e})")]
    NonConstantRatio {
        first: usize,
        second: usize,
        deviation: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
