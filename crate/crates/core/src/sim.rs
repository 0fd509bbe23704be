//! Seeded Monte Carlo simulation of the slotted MDF community.
//!
//! Each slot, every active user stays with probability `p`, a Poisson number
//! of newcomers joins, and each active user draws a packet size. Under the
//! tolerance policy the slot is blocked when the total demand exceeds `C/α`;
//! under the delay policy unserved demand is carried into the next slot
//! before the same test is applied.
//!
//! Replication `r` draws from ChaCha stream `r` of the scenario seed, so
//! results do not depend on the order in which replications run.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::emlm::check_alpha;
use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::stationary::MdfParams;

/// Demand values at or above this are pooled into the histogram tail.
const HISTOGRAM_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Policy {
    Tolerance { alpha: f64 },
    Delay { alpha: f64 },
}

impl Policy {
    pub fn alpha(&self) -> f64 {
        match *self {
            Policy::Tolerance { alpha } | Policy::Delay { alpha } => alpha,
        }
    }
}

/// How an active user's packet size evolves while it stays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequirementMode {
    /// Fresh draw every slot.
    #[default]
    Redraw,
    /// Drawn once on arrival and kept until departure.
    FixedAtArrival,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: MdfParams,
    pub policy: Policy,
    pub capacity: u32,
    /// Measured slots per replication.
    pub slots: u64,
    /// Discarded slots before measurement starts.
    pub burn_in: u64,
    pub seed: u64,
    pub replications: u32,
    pub requirement_mode: RequirementMode,
}

/// About twenty mean holding times, `20 / (1 - p)` slots.
pub fn default_burn_in(stay_prob: f64) -> u64 {
    (20.0 / (1.0 - stay_prob)).ceil() as u64
}

impl SimConfig {
    /// Configuration with the default burn-in and per-slot redraws.
    pub fn new(
        params: MdfParams,
        policy: Policy,
        capacity: u32,
        slots: u64,
        seed: u64,
        replications: u32,
    ) -> Self {
        let burn_in = default_burn_in(params.stay_prob);
        Self {
            params,
            policy,
            capacity,
            slots,
            burn_in,
            seed,
            replications,
            requirement_mode: RequirementMode::Redraw,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        check_alpha(self.policy.alpha())?;
        if self.slots == 0 {
            return Err(Error::Usage("no measured slots".into()));
        }
        if self.replications == 0 {
            return Err(Error::Usage("at least one replication is required".into()));
        }
        Ok(())
    }

    fn threshold(&self, capacity: u32) -> f64 {
        capacity as f64 / self.policy.alpha()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub capacity: u32,
    /// Mean over replications of the fraction of blocked slots.
    pub blocking_estimate: f64,
    pub ci95_half_width: f64,
    /// Standard error of the replication mean.
    pub std_error: f64,
    /// Demand observed over all measured slots, pooled across replications.
    pub empirical_pmf: Pmf,
    pub slots_observed: u64,
    pub seed: u64,
    pub replication_estimates: Vec<f64>,
    pub mean_active_users: f64,
    /// Delay policy only: demand exceeds capacity or the backlog drifts.
    pub unstable: bool,
    /// The active population exceeded `N` at some slot.
    pub population_exceeded: bool,
}

/// Replication mean with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockingEstimate {
    pub mean: f64,
    pub ci95_half_width: f64,
    pub std_error: f64,
}

/// Pools replication results into a mean and a 95% interval.
pub fn estimate_blocking(results: &[SimResult]) -> BlockingEstimate {
    let values: Vec<f64> = results.iter().map(|r| r.blocking_estimate).collect();
    estimate_from_replicates(&values)
}

/// Mean and Student-t 95% half-width of independent replicate values. A
/// single replicate yields the uninformative half-width 1.
pub fn estimate_from_replicates(values: &[f64]) -> BlockingEstimate {
    let n = values.len();
    if n == 0 {
        return BlockingEstimate {
            mean: f64::NAN,
            ci95_half_width: f64::NAN,
            std_error: f64::NAN,
        };
    }
    // Shifting by the first value keeps identical replicates exact.
    let origin = values[0];
    let mean = origin + values.iter().map(|v| v - origin).sum::<f64>() / n as f64;
    if n == 1 {
        log::warn!("one replication gives no variance estimate; reporting a unit half-width");
        return BlockingEstimate {
            mean,
            ci95_half_width: 1.0,
            std_error: f64::NAN,
        };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let std_error = (var / n as f64).sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    BlockingEstimate {
        mean,
        ci95_half_width: t * std_error,
        std_error,
    }
}

/// What one replication observed after burn-in.
#[derive(Debug, Clone)]
struct Trace {
    histogram: Vec<u64>,
    overflow: u64,
    measured: u64,
    active_sum: f64,
    max_active: u64,
    quarter_sums: [f64; 4],
}

impl Trace {
    fn count_above(&self, threshold: f64) -> u64 {
        let first = threshold.floor() as usize + 1;
        let body: u64 = self.histogram.iter().skip(first).sum();
        if first <= HISTOGRAM_CAP {
            body + self.overflow
        } else {
            body
        }
    }

    fn drifting(&self, capacity: u32) -> bool {
        let q = self.measured as f64 / 4.0;
        if q < 1.0 {
            return false;
        }
        let m: Vec<f64> = self.quarter_sums.iter().map(|s| s / q).collect();
        m.windows(2).all(|w| w[1] > w[0]) && m[3] - m[0] > (capacity as f64).max(1.0)
    }
}

struct Sampler {
    sizes: Vec<u64>,
    cumulative: Vec<f64>,
}

impl Sampler {
    fn new(params: &MdfParams) -> Self {
        let mut acc = 0.0;
        let cumulative = params
            .requirement
            .probs()
            .iter()
            .map(|a| {
                acc += a;
                acc
            })
            .collect();
        Self {
            sizes: params
                .requirement
                .sizes()
                .iter()
                .map(|&b| b as u64)
                .collect(),
            cumulative,
        }
    }

    fn class<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.sizes.len() - 1)
    }
}

fn replication_rng(seed: u64, replication: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64);
    rng
}

fn run_replication(config: &SimConfig, replication: u32) -> Trace {
    let params = &config.params;
    let mut rng = replication_rng(config.seed, replication);
    let sampler = Sampler::new(params);
    let arrivals = params.arrivals_per_slot();
    let arrival_dist = (arrivals > 0.0).then(|| Poisson::new(arrivals).expect("positive rate"));
    let p = params.stay_prob;
    let delay = match config.policy {
        Policy::Delay { .. } => Some(config.capacity as u64),
        Policy::Tolerance { .. } => None,
    };

    let mut trace = Trace {
        histogram: Vec::new(),
        overflow: 0,
        measured: 0,
        active_sum: 0.0,
        max_active: 0,
        quarter_sums: [0.0; 4],
    };
    let mut active: u64 = 0;
    let mut classes = vec![0u64; sampler.sizes.len()];
    let mut backlog: u64 = 0;
    let total = config.burn_in + config.slots;
    let quarter = config.slots.div_ceil(4).max(1);

    for slot in 0..total {
        let newcomers = arrival_dist
            .as_ref()
            .map_or(0, |d| d.sample(&mut rng) as u64);
        let demand = match config.requirement_mode {
            RequirementMode::Redraw => {
                if active > 0 {
                    active = Binomial::new(active, p).expect("valid p").sample(&mut rng);
                }
                active += newcomers;
                (0..active)
                    .map(|_| sampler.sizes[sampler.class(&mut rng)])
                    .sum()
            }
            RequirementMode::FixedAtArrival => {
                for n in classes.iter_mut().filter(|n| **n > 0) {
                    *n = Binomial::new(*n, p).expect("valid p").sample(&mut rng);
                }
                for _ in 0..newcomers {
                    classes[sampler.class(&mut rng)] += 1;
                }
                active = classes.iter().sum();
                classes
                    .iter()
                    .zip(&sampler.sizes)
                    .map(|(n, b)| n * b)
                    .sum::<u64>()
            }
        };
        let load = match delay {
            Some(c) => backlog.saturating_sub(c) + demand,
            None => demand,
        };
        backlog = load;
        if slot < config.burn_in {
            continue;
        }
        let idx = load as usize;
        if idx >= HISTOGRAM_CAP {
            trace.overflow += 1;
        } else {
            if idx >= trace.histogram.len() {
                trace.histogram.resize(idx + 1, 0);
            }
            trace.histogram[idx] += 1;
        }
        let k = ((slot - config.burn_in) / quarter) as usize;
        trace.quarter_sums[k.min(3)] += load as f64;
        trace.measured += 1;
        trace.active_sum += active as f64;
        trace.max_active = trace.max_active.max(active);
    }
    trace
}

fn run_all(config: &SimConfig) -> Vec<Trace> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..config.replications)
            .into_par_iter()
            .map(|r| run_replication(config, r))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..config.replications)
            .map(|r| run_replication(config, r))
            .collect()
    }
}

fn summarize(config: &SimConfig, traces: &[Trace], capacity: u32) -> SimResult {
    let threshold = config.threshold(capacity);
    let estimates: Vec<f64> = traces
        .iter()
        .map(|t| t.count_above(threshold) as f64 / t.measured as f64)
        .collect();
    let est = estimate_from_replicates(&estimates);

    let len = traces.iter().map(|t| t.histogram.len()).max().unwrap_or(0);
    let mut pooled = vec![0u64; len];
    let mut overflow = 0;
    for t in traces {
        for (p, c) in pooled.iter_mut().zip(&t.histogram) {
            *p += c;
        }
        overflow += t.overflow;
    }
    let observed: u64 = traces.iter().map(|t| t.measured).sum();
    let masses: Vec<f64> = pooled.iter().map(|&c| c as f64 / observed as f64).collect();
    let empirical_pmf = Pmf::from_masses_with_tail(masses, overflow as f64 / observed as f64);

    let max_active = traces.iter().map(|t| t.max_active).max().unwrap_or(0);
    let population_exceeded = max_active > config.params.population;
    if population_exceeded {
        log::warn!(
            "active users reached {max_active}, above the population of {}",
            config.params.population
        );
    }
    let unstable = match config.policy {
        Policy::Delay { .. } => {
            let mean_demand = config.params.arrivals_per_slot() / (1.0 - config.params.stay_prob)
                * config.params.requirement.mean();
            mean_demand >= capacity as f64 || traces.iter().any(|t| t.drifting(capacity))
        }
        Policy::Tolerance { .. } => false,
    };
    SimResult {
        capacity,
        blocking_estimate: est.mean,
        ci95_half_width: est.ci95_half_width,
        std_error: est.std_error,
        empirical_pmf,
        slots_observed: observed,
        seed: config.seed,
        replication_estimates: estimates,
        mean_active_users: traces.iter().map(|t| t.active_sum).sum::<f64>() / observed as f64,
        unstable,
        population_exceeded,
    }
}

/// Simulates the tolerance policy at `config.capacity`.
pub fn simulate_tolerance(config: &SimConfig) -> Result<SimResult> {
    Ok(simulate_tolerance_sweep(config, &[config.capacity])?.remove(0))
}

/// Tolerance blocking at several capacities from one set of sample paths.
/// The demand path does not depend on capacity, so each entry equals what
/// [`simulate_tolerance`] returns at that capacity with the same seed.
pub fn simulate_tolerance_sweep(config: &SimConfig, capacities: &[u32]) -> Result<Vec<SimResult>> {
    config.validate()?;
    if !matches!(config.policy, Policy::Tolerance { .. }) {
        return Err(Error::Usage(
            "tolerance simulation needs the tolerance policy".into(),
        ));
    }
    let traces = run_all(config);
    Ok(capacities
        .iter()
        .map(|&c| summarize(config, &traces, c))
        .collect())
}

/// Simulates the delay policy; `unstable` is set when the backlog cannot
/// settle.
pub fn simulate_delay(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    if !matches!(config.policy, Policy::Delay { .. }) {
        return Err(Error::Usage(
            "delay simulation needs the delay policy".into(),
        ));
    }
    let traces = run_all(config);
    Ok(summarize(config, &traces, config.capacity))
}

/// Dispatches on the configured policy.
pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    match config.policy {
        Policy::Tolerance { .. } => simulate_tolerance(config),
        Policy::Delay { .. } => simulate_delay(config),
    }
}
