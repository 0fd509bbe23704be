use thiserror::Error;

/// Errors raised by the solvers and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The call itself is malformed (bad sizes, limits exceeded, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// A distribution violates its normalization or support invariants.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A rate diverges (stay probability equal to one).
    #[error("divergent rate: {0}")]
    Divergence(String),

    /// The delay chain has no stationary law.
    #[error("unstable model: {0}")]
    Unstable(String),

    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NotConverged { iterations: usize, last_change: f64 },

    /// The blocking target cannot be met at any capacity.
    #[error("infeasible target: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
