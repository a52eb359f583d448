use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("reward {0} is outside [0, 1]")]
    RewardOutOfRange(f64),

    #[error("arm {got} observed but arm {expected} was selected")]
    UnexpectedArm { expected: usize, got: usize },

    #[error("observe() called without a preceding select_arm()")]
    NoPendingSelection,

    #[error("horizon exhausted after {0} steps")]
    Exhausted(u64),

    #[error("infeasible horizon: b*N = {prepulls} >= T = {horizon}")]
    InfeasibleHorizon { prepulls: u64, horizon: u64 },

    #[error("pre-pulls alone already meet the budget (solved c = {c} < 1)")]
    BudgetExceededByPrepulls { c: f64 },

    #[error("privacy budget infeasible: {0}")]
    BudgetInfeasible(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
