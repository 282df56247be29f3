use thiserror::Error;

/// Errors produced by the risk library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum RiskError {
    #[error("invalid probability space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("random vectors live on different probability spaces")]
    SpaceMismatch,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("law of Z is not symmetric: {0}")]
    AsymmetricLaw(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown property `{0}`")]
    UnknownProperty(String),

    #[error("could not parse `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("grid of {needed} points exceeds the budget of {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("infeasible dual: {0}")]
    InfeasibleDual(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("total capital is unbounded below along {direction:?}")]
    Unbounded { direction: Vec<f64> },

    #[error("infimum {infimum} of total capital is finite but not attained")]
    NotAttained { infimum: f64 },

    #[error("stage index {index} out of range (stages: {stages})")]
    StageOutOfRange { index: usize, stages: usize },

    #[error("{0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, RiskError>;
