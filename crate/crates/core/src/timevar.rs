//! Time-dependent demand models: blocking when each user's requirement law
//! depends on elapsed service time, and the delay policy where unserved
//! demand carries over to the next slot.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::emlm::check_alpha;
use crate::error::{Error, Result};
use crate::pmf::{compound_poisson_from_pmf, convolve, mixture_pmf, poisson_pmf, tail_prob, Pmf};

/// Support mass below this is dropped from the delay chain state. The
/// solver trims at a quarter of its tolerance when that is smaller, so the
/// returned law stays a fixed point within twice the tolerance.
const STATE_TAIL_CUTOFF: f64 = 1e-10;

/// Relative load margin below which the carry-over chain counts as critical.
const CRITICAL_SLACK: f64 = 1e-9;

/// Requirement laws `W(0..=T)` indexed by elapsed service time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeVaryingProfile {
    laws: Vec<Pmf>,
}

impl TimeVaryingProfile {
    pub fn new(laws: Vec<Pmf>) -> Result<Self> {
        if laws.is_empty() {
            return Err(Error::InvalidDistribution(
                "profile needs at least one law".into(),
            ));
        }
        if let Some(s) = laws.iter().position(|w| w.tail_mass() > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "law W({s}) must have finite support"
            )));
        }
        Ok(Self { laws })
    }

    /// Same law at every elapsed time.
    pub fn homogeneous(law: Pmf, horizon: usize) -> Result<Self> {
        Self::new(vec![law; horizon + 1])
    }

    /// Uniform bound `T` on service slots.
    pub fn horizon(&self) -> usize {
        self.laws.len() - 1
    }

    pub fn laws(&self) -> &[Pmf] {
        &self.laws
    }
}

/// Per-user demand averaged over a uniform elapsed time.
pub fn elapsed_mixture(profile: &TimeVaryingProfile) -> Pmf {
    let n = profile.laws.len();
    let weights = vec![1.0 / n as f64; n];
    let mut mix = mixture_pmf(&profile.laws, &weights).expect("weights match components");
    // Uniform weights may miss 1 by an ulp per component.
    mix = mix.renormalized();
    mix
}

/// `P(Σ_{i ∈ A} W_i > C)` with `|A| ~ Poi(λN(T+1))` and elapsed times i.i.d.
/// uniform on `0..=T`.
pub fn nontolerance_blocking(
    lambda: f64,
    population: u64,
    profile: &TimeVaryingProfile,
    capacity: u32,
    tol: f64,
) -> Result<f64> {
    let pmf = active_demand_pmf(lambda, population, profile, tol)?;
    Ok(tail_prob(&pmf, capacity as f64))
}

/// Blocking with the overload threshold raised to `C/α`.
pub fn tolerance_blocking(
    lambda: f64,
    population: u64,
    profile: &TimeVaryingProfile,
    capacity: u32,
    alpha: f64,
    tol: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let pmf = active_demand_pmf(lambda, population, profile, tol)?;
    Ok(tail_prob(&pmf, capacity as f64 / alpha))
}

/// Law of the total demand of all active users.
pub fn active_demand_pmf(
    lambda: f64,
    population: u64,
    profile: &TimeVaryingProfile,
    tol: f64,
) -> Result<Pmf> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Domain(format!("arrival rate {lambda}")));
    }
    let rate = lambda * population as f64 * (profile.horizon() + 1) as f64;
    compound_poisson_from_pmf(rate, &elapsed_mixture(profile), tol, None)
}

/// Carry-over chain `S' = max{0, S - C} + D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayChainParams {
    /// Law of the new demand arriving each slot.
    pub increment: Pmf,
    pub capacity: u32,
    pub alpha: f64,
}

impl DelayChainParams {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !self.increment.mean().is_finite() {
            return Err(Error::Domain("increment mean is not finite".into()));
        }
        Ok(())
    }

    /// Load per slot relative to capacity, `E[D] / C`.
    pub fn utilization(&self) -> f64 {
        self.increment.mean() / self.capacity as f64
    }
}

/// Moves all mass at or below `capacity` to zero and shifts the rest down.
fn drain(state: &Pmf, capacity: usize) -> Pmf {
    let masses = state.masses();
    let len = masses.len().saturating_sub(capacity).max(1);
    let mut out = vec![0.0; len];
    out[0] = masses.iter().take(capacity + 1).sum();
    for (j, &m) in masses.iter().enumerate().skip(capacity + 1) {
        out[j - capacity] += m;
    }
    Pmf::from_masses_with_tail(out, state.tail_mass())
}

/// One step of the carry-over chain.
pub fn delay_transition(state: &Pmf, params: &DelayChainParams) -> Pmf {
    convolve(&drain(state, params.capacity as usize), &params.increment)
}

/// Fixed point of [`delay_transition`], iterated from an empty backlog until
/// successive laws are within `tol` in total variation.
pub fn delay_stationary(params: &DelayChainParams, tol: f64, max_iters: usize) -> Result<Pmf> {
    params.validate()?;
    let mean = params.increment.mean();
    // A truncated critical law keeps a mean a hair below capacity; such
    // chains never settle within any practical iteration budget.
    if mean >= params.capacity as f64 * (1.0 - CRITICAL_SLACK) {
        return Err(Error::Unstable(format!(
            "mean demand per slot {mean} is not below capacity {}",
            params.capacity
        )));
    }
    let chain = DelayChainParams {
        increment: params.increment.renormalized(),
        ..params.clone()
    };
    let cutoff = STATE_TAIL_CUTOFF.min(0.25 * tol);
    let mut state = Pmf::point(0);
    let mut change = f64::INFINITY;
    for _ in 0..max_iters {
        let next = delay_transition(&state, &chain).trim_tail_renormalized(cutoff);
        change = next.total_variation(&state);
        state = next;
        if change < tol {
            return Ok(state);
        }
    }
    Err(Error::NotConverged {
        iterations: max_iters,
        last_change: change,
    })
}

/// `P(S > C/α)` under the stationary backlog-plus-demand law.
pub fn delay_blocking(params: &DelayChainParams, tol: f64, max_iters: usize) -> Result<f64> {
    let pi = delay_stationary(params, tol, max_iters)?;
    Ok(tail_prob(&pi, params.capacity as f64 / params.alpha))
}

/// Exact delay blocking at slot `t` of a system that starts empty at slot
/// zero, for tiny instances.
///
/// Users arrive in Poisson cohorts of mean `λN` each slot and stay for
/// `T + 1` slots, drawing a fresh requirement from `W(elapsed)` every slot.
/// The recursion carries the joint law of the backlog and of the cohort
/// sizes still in service, so every elapsed-time configuration is
/// enumerated explicitly. Cohort sizes are truncated at `k_max`.
#[allow(clippy::too_many_arguments)]
pub fn delay_bruteforce_oracle(
    lambda: f64,
    population: u64,
    profile: &TimeVaryingProfile,
    capacity: u32,
    alpha: f64,
    t: usize,
    k_max: usize,
) -> Result<f64> {
    check_alpha(alpha)?;
    let horizon = profile.horizon();
    let per_slot = lambda * population as f64;
    if t > 6 || horizon > 2 || k_max > 8 {
        return Err(Error::Usage(format!(
            "oracle limited to t <= 6, T <= 2, k_max <= 8 (got t={t}, T={horizon}, k_max={k_max})"
        )));
    }
    if !(per_slot >= 0.0 && per_slot * (horizon + 1) as f64 <= 1.0) {
        return Err(Error::Usage(format!(
            "oracle requires lambda N (T+1) <= 1, got {}",
            per_slot * (horizon + 1) as f64
        )));
    }
    let arrivals = poisson_pmf(per_slot, 1e-300).unwrap_or_else(|_| Pmf::point(0));
    let cohort_weight = |n: usize| arrivals.prob(n);

    // Demand of the active cohorts, keyed by their sizes ordered by
    // elapsed time 0..=T.
    let mut demand_cache: BTreeMap<Vec<usize>, Pmf> = BTreeMap::new();
    let mut demand_of = |active: &[usize]| -> Pmf {
        demand_cache
            .entry(active.to_vec())
            .or_insert_with(|| {
                let mut acc = Pmf::point(0);
                for (elapsed, &count) in active.iter().enumerate() {
                    for _ in 0..count {
                        acc = convolve(&acc, &profile.laws[elapsed]);
                    }
                }
                acc
            })
            .clone()
    };

    // Key: sizes of cohorts that will have elapsed 1..=T next slot, ordered
    // by elapsed time at the current slot (0..T-1). Value: sub-probability
    // law of S at the current slot.
    let mut states: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    states.insert(vec![0; horizon], vec![1.0]);
    let cap = capacity as usize;
    for _ in 0..=t {
        let mut next_states: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
        for (cohorts, sub) in &states {
            let backlog = drain_raw(sub, cap);
            for newcomers in 0..=k_max {
                let w = cohort_weight(newcomers);
                if w == 0.0 {
                    continue;
                }
                let mut active = Vec::with_capacity(horizon + 1);
                active.push(newcomers);
                active.extend_from_slice(cohorts);
                let demand = demand_of(&active);
                let law = convolve_raw(&backlog, demand.masses());
                active.truncate(horizon);
                let slot_entry = next_states.entry(active).or_default();
                if slot_entry.len() < law.len() {
                    slot_entry.resize(law.len(), 0.0);
                }
                for (e, x) in slot_entry.iter_mut().zip(&law) {
                    *e += w * x;
                }
            }
        }
        states = next_states;
    }
    let threshold = capacity as f64 / alpha;
    let first = if threshold < 0.0 {
        0
    } else {
        threshold.floor() as usize + 1
    };
    Ok(states
        .values()
        .map(|sub| sub.iter().skip(first).sum::<f64>())
        .sum())
}

fn drain_raw(sub: &[f64], capacity: usize) -> Vec<f64> {
    let len = sub.len().saturating_sub(capacity).max(1);
    let mut out = vec![0.0; len];
    out[0] = sub.iter().take(capacity + 1).sum();
    for (j, &m) in sub.iter().enumerate().skip(capacity + 1) {
        out[j - capacity] += m;
    }
    out
}

fn convolve_raw(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
