use thiserror::Error;

/// Errors raised by constructors, solvers and the classification predicates.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid discrete instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no probability mass on [{a}, {b}]")]
    ZeroMass { a: f64, b: f64 },

    #[error("supports [{0}, {1}] and [{2}, {3}] are not nested")]
    SupportsNotNested(f64, f64, f64, f64),

    #[error("candidate distribution is not a mean-preserving contraction of the prior")]
    NotMpc,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("checking costs differ across agents ({0} vs {1})")]
    HeterogeneousCost(f64, f64),

    #[error("ragged mechanism: grid has {grid} points, p has {p}, q has {q}")]
    Ragged { grid: usize, p: usize, q: usize },

    #[error("linear program failed: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, Error>;
