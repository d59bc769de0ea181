use thiserror::Error;

/// Errors produced by model construction, solvers, and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    /// Arrival probabilities must lie in (0, 1]; the sub-problem chain
    /// formulas divide by p, so p = 0 is rejected at construction.
    #[error("arrival probability must be in (0, 1], got {value}")]
    InvalidProbability { value: f64 },

    /// The threshold structure is only established for nonnegative update
    /// cost; negative costs are rejected rather than modeled.
    #[error("update cost must be nonnegative, got {value}")]
    NegativeCost { value: f64 },

    /// A threshold-policy quantity was requested with threshold 0.
    #[error("threshold must be at least 1, got {value}")]
    InvalidThreshold { value: u64 },

    /// The age-space truncation is too small for the model.
    #[error("age truncation x_max = {x_max} is too small: {reason}")]
    TruncationTooSmall { x_max: u64, reason: String },

    /// A value-iteration solver did not reach its stopping tolerance.
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e}, tolerance {tolerance:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    /// A solved sub-problem policy is not of the threshold type.
    #[error("solved policy is not threshold-type: {reason}")]
    NonThresholdPolicy { reason: String },

    /// The joint model would exceed the configured state-space cap.
    #[error("joint state space has {states} states, above the cap of {cap}")]
    StateSpaceTooLarge { states: u64, cap: u64 },

    /// Experiment configuration is invalid.
    #[error("invalid experiment config: {0}")]
    Config(String),

    /// Failure reading or writing experiment files.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
