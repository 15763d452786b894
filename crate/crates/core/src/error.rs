use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate abscissa {0} in interpolation data")]
    DuplicateAbscissa(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid family descriptor: {0}")]
    Validation(String),

    #[error("expected {expected} classes, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("class is not integral after scaling by {multiplier}: {class}")]
    Scaling { multiplier: String, class: String },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("polynomial fit did not stabilize: {0}")]
    Fit(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
