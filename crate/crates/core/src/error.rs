use thiserror::Error;

use crate::env::MetaAction;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field failed validation. Displays as `"<field> <reason>"`.
    #[error("{field} {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("query {0} was already executed in this episode")]
    DuplicateQuery(MetaAction),

    #[error("query budget of {budget} exhausted")]
    BudgetExceeded { budget: usize },

    #[error("action {action} out of bounds: {reason}")]
    InvalidAction { action: MetaAction, reason: String },

    #[error("cost-weight grid is empty")]
    EmptyGrid,

    #[error("cost weight {0} outside [0, 1]")]
    InvalidCostWeight(f64),

    #[error("degenerate scores: standard deviation is zero")]
    ZeroStd,

    #[error("need at least {needed} values, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("unknown policy spec `{0}`")]
    UnknownPolicy(String),

    #[error("unknown tutor condition `{0}`")]
    UnknownCondition(String),

    #[error("unknown session `{0}`")]
    UnknownSession(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("corrupt event log: {0}")]
    CorruptLog(String),

    #[error("reliability estimation: {0}")]
    Reliability(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
