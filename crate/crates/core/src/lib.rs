//! Teletraffic analysis for multi-type data flow (MDF) communities.
//!
//! Users arrive as a Poisson stream, stay for a memoryless number of slots
//! and draw a fresh packet-size requirement every slot. The crate computes
//! the law of the total demand, the probability that it overloads a given
//! capacity, and the smallest capacity meeting a blocking target:
//!
//! - [`pmf`]: finite integer distributions, Poisson and compound Poisson laws.
//! - [`emlm`]: the Erlang multirate loss model via the Kaufman-Roberts recursion.
//! - [`stationary`]: the stationary demand of the slotted MDF chain.
//! - [`timevar`]: requirement laws that depend on elapsed service time, and
//!   the delay policy that carries unserved demand forward.
//! - [`sim`]: a seeded Monte Carlo simulator of the slotted community.
//! - [`planner`]: capacity pre-allocation and blocking-versus-capacity sweeps.

pub mod emlm;
pub mod error;
pub mod planner;
pub mod pmf;
pub mod sim;
pub mod stationary;
pub mod timevar;

pub use emlm::{default_j_max, emlm_blocking, kaufman_roberts_solve, EmlmParams};
pub use error::{Error, Result};
pub use pmf::{
    compound_poisson_from_pmf, compound_poisson_pmf, convolve, mixture_pmf, poisson_pmf, tail_prob,
    Pmf, RequirementDistribution, DEFAULT_TOL,
};
pub use stationary::{
    blocking_prob, convergence_report, implied_mu, slot_survival_prob, stationary_pmf,
    ConvergencePoint, MdfParams, RateMode,
};
pub use timevar::{
    delay_blocking, delay_bruteforce_oracle, delay_stationary, delay_transition, elapsed_mixture,
    nontolerance_blocking, tolerance_blocking, DelayChainParams, TimeVaryingProfile,
};
