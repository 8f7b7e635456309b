use alloc::string::String;

use crate::gridworld::MazeError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index out of range: {what} {index} (limit {limit})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("non-finite reward at pair {pair}")]
    NonFiniteReward { pair: usize },

    #[error("invalid model ({count} violation(s)), first: {first}")]
    InvalidModel { count: usize, first: String },

    #[error("positive reward {value} at pair {pair}; rewards must be shifted so that max r = 0")]
    PositiveReward { pair: usize, value: f64 },

    #[error("tilted matrix is not primitive (irreducible: {irreducible}, period: {period})")]
    NotPrimitive { irreducible: bool, period: usize },

    #[error("power iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("argument out of domain: {0}")]
    Domain(&'static str),

    #[error("eigenvector entry at pair {pair} is below the positivity floor")]
    DegenerateEigenvector { pair: usize },

    #[error("state {state} has no positive policy mass")]
    DegenerateState { state: usize },

    #[error("initial distribution has no overlap with the eigenvector support")]
    DegenerateInitial,

    #[error("driven transition {from} -> {to} is not supported by the prior")]
    AbsoluteContinuity { from: usize, to: usize },

    #[error("soft Bellman backup produced a non-finite value at state {state}")]
    Overflow { state: usize },

    #[error("marginal at step {step} underflowed")]
    Underflow { step: usize },

    #[error(transparent)]
    Maze(#[from] MazeError),
}
