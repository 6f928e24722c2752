//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("N must be an odd integer >= 3, got {0}")]
    InvalidAgentCount(usize),

    #[error("discount must lie in [0, 1), got {0}")]
    InvalidDiscount(f64),

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("grid resolution must be >= 2, got {0}")]
    InvalidGrid(usize),

    #[error("probability p_{index} = {value} lies outside [0, 1]")]
    InvalidProbability { index: usize, value: f64 },

    #[error("profile has {got} entries, expected {expected}")]
    ProfileLength { got: usize, expected: usize },

    #[error("state index {index} out of range 1..={max}")]
    StateOutOfRange { index: usize, max: usize },

    #[error("pair index {0} has no partner state (valid pairs use 1..=N-1)")]
    UnpairedState(usize),

    #[error("full configuration chain is limited to N <= {max}, got {got}")]
    FullMatrixTooLarge { got: usize, max: usize },

    #[error("agent index {index} out of range 1..={max}")]
    AgentOutOfRange { index: usize, max: usize },

    #[error("off-block magnitude {max_off_block:.3e} exceeds tolerance {tol:.3e}; matrix does not have the paired-state block structure")]
    BlockStructureViolated { max_off_block: f64, tol: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("no sign change for {what} in [{lo}, {hi}]")]
    NoBracket { what: &'static str, lo: f64, hi: f64 },

    #[error("scaled amplitude a = {0} must be positive")]
    NonPositiveAmplitude(f64),

    #[error("scaled horizon b = {0} must be non-negative")]
    NegativeHorizon(f64),

    #[error("reduced matrix entry out of [0, 1] for a = {a}, M = {m}")]
    ReducedMatrixDomain { a: f64, m: usize },

    #[error("simulation must run for at least {min} days, got {got}")]
    TooFewDays { got: usize, min: usize },

    #[error("state C_{state} visited only {visits} times with a complete window, need >= {required}")]
    InsufficientVisits {
        state: usize,
        visits: usize,
        required: usize,
    },

    #[error("simulation supports at most 32 agents, got {0}")]
    TooManyAgentsForSimulation(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
