use thiserror::Error;

/// Errors raised by model construction and the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LsvError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown {coefficient} family `{family}`")]
    UnknownFamily { coefficient: String, family: String },

    #[error("parameter `{name}` = {value} out of range: {reason}")]
    ParameterOutOfRange {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("missing parameter `{0}`")]
    MissingParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("root bracket not found: {0}")]
    RootBracket(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, LsvError>;
