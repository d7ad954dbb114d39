use thiserror::Error;

/// Errors produced by model construction, recursions, solvers and reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    Model(String),

    #[error("stage {stage}: zero density at x = {x}; scores are defined only on positive-density points")]
    ZeroDensity { stage: usize, x: f64 },

    #[error("theta = {theta} outside the parameter interval ({lo}, {hi})")]
    ThetaOutOfRange { theta: f64, lo: f64, hi: f64 },

    #[error("assumption violated at stage {stage}, theta = {theta}: {reason}")]
    AssumptionViolation {
        stage: usize,
        theta: f64,
        reason: String,
    },

    #[error("value grid invariant violated: {0}")]
    InvariantViolation(String),

    #[error("grid too narrow: {reason}; suggested z-range at least [{suggest_lo}, {suggest_hi}]")]
    GridTooNarrow {
        reason: String,
        suggest_lo: f64,
        suggest_hi: f64,
    },

    #[error("value iteration did not converge after {iterations} sweeps (last sup-norm delta {last_delta:e})")]
    ConvergenceFailure {
        iterations: usize,
        last_delta: f64,
        log: Vec<f64>,
    },

    #[error("model has no repeating stage structure; untruncated limits are unavailable")]
    UnstructuredLimit,

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("trajectory exceeded the hard cap of {cap} stages without stopping")]
    Runaway { cap: usize },

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
