use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector of length {len} does not split into groups of size {group_size}")]
    GroupLayout { len: usize, group_size: usize },
    #[error("step parameter must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("frequency response is not conjugate symmetric at bin ({row}, {col})")]
    NotConjugateSymmetric { row: usize, col: usize },
    #[error("reference signal is identically zero")]
    ZeroReference,
    #[error("observation stream exhausted: {needed} records needed, {available} available")]
    StreamExhausted { needed: usize, available: usize },
    #[error("non-finite iterate at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("step size {gamma} at iteration {iteration} is outside ]0, {bound}[")]
    StepOutOfRange { iteration: usize, gamma: f64, bound: f64 },
    #[error("convergence conditions violated: {0}")]
    ConditionsViolated(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("no snapshot stored for iteration {iteration} (checkpoint stride {stride})")]
    MissingSnapshot { iteration: usize, stride: usize },
}
