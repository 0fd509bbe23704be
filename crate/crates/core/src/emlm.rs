//! Erlang multirate loss model: Kaufman-Roberts occupancy recursion and
//! the tolerance blocking probability derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::{compound_poisson_from_pmf, tail_prob, Pmf, RequirementDistribution, DEFAULT_TOL};

/// Running values are rescaled once they exceed this bound.
const RESCALE_ABOVE: f64 = 1e100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmlmParams {
    /// Arrival rate per user per unit time.
    pub lambda_per_user: f64,
    pub population: u64,
    /// Service rate of the exponential holding time.
    pub mu: f64,
    pub requirement: RequirementDistribution,
    /// Tolerance threshold; `1.0` is the non-tolerance criterion.
    pub alpha: f64,
    pub capacity: u32,
}

impl EmlmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_per_user.is_finite() && self.lambda_per_user > 0.0) {
            return Err(Error::Domain(format!(
                "arrival rate {}",
                self.lambda_per_user
            )));
        }
        if self.population == 0 {
            return Err(Error::Domain("population must be positive".into()));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::Domain(format!("service rate {}", self.mu)));
        }
        check_alpha(self.alpha)
    }

    /// Total offered load `λN/μ`.
    pub fn offered_load(&self) -> f64 {
        self.lambda_per_user * self.population as f64 / self.mu
    }

    /// Per-class offered loads `ρ_k = λ N a_k / μ`.
    pub fn class_loads(&self) -> Vec<f64> {
        let load = self.offered_load();
        self.requirement.probs().iter().map(|a| load * a).collect()
    }

    /// Largest possible occupancy `N · max_k b_k`.
    pub fn occupancy_bound(&self) -> usize {
        (self.population as usize).saturating_mul(self.requirement.max_size() as usize)
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "tolerance threshold {alpha} outside (0, 1]"
        )))
    }
}

/// Smallest support whose compound-Poisson tail is below `1e-12`, capped at
/// `N · max_k b_k` and never below `max_k b_k`.
pub fn default_j_max(params: &EmlmParams) -> Result<usize> {
    params.validate()?;
    let bound = params.occupancy_bound();
    let cp = compound_poisson_from_pmf(
        params.offered_load(),
        &params.requirement.to_pmf(),
        DEFAULT_TOL,
        Some(bound),
    )?;
    Ok(cp
        .j_max()
        .max(params.requirement.max_size() as usize)
        .min(bound))
}

/// Solves `j q(j) = Σ_k ρ_k b_k q(j - b_k)` from `q(0) = 1` and normalizes
/// over `0..=j_max`.
pub fn kaufman_roberts_solve(params: &EmlmParams, j_max: usize) -> Result<Pmf> {
    kaufman_roberts_seeded(params, j_max, 1.0)
}

pub(crate) fn kaufman_roberts_seeded(params: &EmlmParams, j_max: usize, seed: f64) -> Result<Pmf> {
    params.validate()?;
    let max_b = params.requirement.max_size() as usize;
    if j_max < max_b {
        return Err(Error::Usage(format!(
            "j_max {j_max} below the largest packet size {max_b}"
        )));
    }
    if j_max > params.occupancy_bound() {
        return Err(Error::Usage(format!(
            "j_max {j_max} exceeds N * max b = {}",
            params.occupancy_bound()
        )));
    }
    let terms: Vec<(usize, f64)> = params
        .requirement
        .sizes()
        .iter()
        .zip(params.class_loads())
        .map(|(&b, rho)| (b as usize, rho * b as f64))
        .collect();

    let mut q = vec![0.0; j_max + 1];
    q[0] = seed;
    for j in 1..=j_max {
        let acc: f64 = terms
            .iter()
            .filter(|(b, _)| *b <= j)
            .map(|(b, w)| w * q[j - b])
            .sum();
        q[j] = acc / j as f64;
        if q[j] > RESCALE_ABOVE {
            // The recursion only reaches back max_b entries, but the final
            // normalization needs every stored value on a common scale.
            for v in &mut q[..=j] {
                *v /= RESCALE_ABOVE;
            }
        }
    }
    let total: f64 = q.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Domain(format!(
            "occupancy recursion degenerated (sum {total})"
        )));
    }
    Pmf::new(q.into_iter().map(|v| v / total).collect(), 0.0)
}

/// `P(S > C/α)` over the solved occupancy law.
pub fn emlm_blocking(params: &EmlmParams, j_max: usize) -> Result<f64> {
    let q = kaufman_roberts_solve(params, j_max)?;
    Ok(tail_prob(&q, params.capacity as f64 / params.alpha))
}
