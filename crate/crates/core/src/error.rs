use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid map specification: {0}")]
    InvalidSpec(String),

    #[error("invalid driving measure: {0}")]
    InvalidMeasure(String),

    #[error("Newton inversion did not converge after {iterations} steps (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate cocycle: {0}")]
    Degenerate(String),

    #[error("precondition failed: {0}")]
    PreconditionFail(String),

    #[error("requested index {requested} outside available data (max {available})")]
    OutOfRange { requested: usize, available: usize },

    #[error("only {count} samples fell inside the tube (need at least {required})")]
    InsufficientSlice { count: usize, required: usize },

    #[error("unstable curve left the chart at stage {stage}")]
    ChartOverflow { stage: usize },

    #[error("estimate unreliable: {0}")]
    Unreliable(String),
}
