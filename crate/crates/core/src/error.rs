use thiserror::Error;

/// Errors raised while loading models or running the analyses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("duplicate state label `{0}`")]
    DuplicateState(String),

    #[error("unknown state label `{0}`")]
    UnknownState(String),

    #[error("row `{state}`: probability mass function sums to {sum} (expected 1)")]
    PmfMass { state: String, sum: f64 },

    #[error("row `{state}`: invalid probability {value}")]
    InvalidProbability { state: String, value: f64 },

    #[error(
        "row `{state}`: incoherent intervals (sum of lower = {sum_lower}, sum of upper = {sum_upper})"
    )]
    IncoherentIntervals {
        state: String,
        sum_lower: f64,
        sum_upper: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("gamble contains a non-finite value")]
    NonFinite,

    #[error("state subset must be nonempty")]
    EmptySubset,

    #[error("state subset does not induce a strongly connected graph")]
    NotStronglyConnected,

    #[error("state subset is not closed")]
    NotClosed,

    #[error("state subset is not a communication class")]
    NotCommunicating,

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("model is not top class absorbing")]
    NotWeaklyErgodic,

    #[error("model has interval rows; convert them to vertex rows first")]
    IntervalRowsPresent,

    #[error("enumeration of {count} candidates exceeds the cap of {cap}")]
    CapExceeded { count: u128, cap: u128 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
