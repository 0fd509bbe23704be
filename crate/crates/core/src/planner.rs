//! Capacity pre-allocation: the smallest capacity whose blocking probability
//! meets a target, and blocking-versus-capacity tables.

use serde::{Deserialize, Serialize};

use crate::emlm::{check_alpha, default_j_max, kaufman_roberts_solve, EmlmParams};
use crate::error::{Error, Result};
use crate::pmf::{tail_prob, Pmf, DEFAULT_TOL};
use crate::sim::{simulate, simulate_tolerance_sweep, Policy, SimConfig};
use crate::stationary::{stationary_pmf, MdfParams, RateMode};
use crate::timevar::{active_demand_pmf, delay_stationary, DelayChainParams, TimeVaryingProfile};

/// Convergence settings for the delay chain inside the planner.
const DELAY_TOL: f64 = 1e-12;
const DELAY_MAX_ITERS: usize = 200_000;

/// Demand model whose blocking the planner inverts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PlanModel {
    /// Loss model; `capacity` and `alpha` of the params are ignored.
    Emlm {
        params: EmlmParams,
    },
    Mdf {
        params: MdfParams,
        mode: RateMode,
    },
    Timevar {
        lambda: f64,
        population: u64,
        profile: TimeVaryingProfile,
    },
    /// Carry-over chain with the given per-slot demand.
    Delay {
        increment: Pmf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Step the capacity up by one until the target is met.
    #[default]
    Linear,
    Bisection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub model: PlanModel,
    pub alpha: f64,
    /// Acceptable blocking probability.
    pub epsilon: f64,
    /// First capacity tried; defaults to the largest single demand.
    pub c_start: Option<u32>,
    pub search: SearchMode,
}

impl PlanRequest {
    pub fn new(model: PlanModel, alpha: f64, epsilon: f64) -> Self {
        Self {
            model,
            alpha,
            epsilon,
            c_start: None,
            search: SearchMode::Linear,
        }
    }
}

/// Blocking as a function of capacity for one model.
enum Curve {
    /// Capacity only moves the threshold on a fixed demand law.
    Fixed(Pmf),
    /// Capacity changes the chain itself.
    Delay(Pmf),
}

impl Curve {
    fn build(model: &PlanModel) -> Result<Self> {
        Ok(match model {
            PlanModel::Emlm { params } => {
                let params = EmlmParams {
                    alpha: 1.0,
                    ..params.clone()
                };
                Curve::Fixed(kaufman_roberts_solve(&params, default_j_max(&params)?)?)
            }
            PlanModel::Mdf { params, mode } => {
                Curve::Fixed(stationary_pmf(params, *mode, DEFAULT_TOL)?)
            }
            PlanModel::Timevar {
                lambda,
                population,
                profile,
            } => Curve::Fixed(active_demand_pmf(
                *lambda,
                *population,
                profile,
                DEFAULT_TOL,
            )?),
            PlanModel::Delay { increment } => Curve::Delay(increment.clone()),
        })
    }

    fn blocking(&self, capacity: u32, alpha: f64) -> Result<f64> {
        match self {
            Curve::Fixed(pmf) => Ok(tail_prob(pmf, capacity as f64 / alpha)),
            Curve::Delay(increment) => {
                let params = DelayChainParams {
                    increment: increment.clone(),
                    capacity,
                    alpha,
                };
                match delay_stationary(&params, DELAY_TOL, DELAY_MAX_ITERS) {
                    Ok(pi) => Ok(tail_prob(&pi, capacity as f64 / alpha)),
                    // The backlog grows without bound: every slot blocks.
                    Err(Error::Unstable(_)) => Ok(1.0),
                    Err(e) => Err(e),
                }
            }
        }
    }

    /// Blocking floor and the capacity from which it is reached.
    fn floor(&self, alpha: f64) -> (f64, u32) {
        match self {
            Curve::Fixed(pmf) => (pmf.tail_mass(), (alpha * pmf.j_max() as f64).ceil() as u32),
            // Demand never exceeds the support of one increment once the
            // capacity drains everything each slot.
            Curve::Delay(increment) => (increment.tail_mass(), increment.support_max() as u32),
        }
    }
}

/// Largest single demand: `max_k b_k` for requirement laws.
pub fn default_c_start(model: &PlanModel) -> u32 {
    match model {
        PlanModel::Emlm { params } => params.requirement.max_size(),
        PlanModel::Mdf { params, .. } => params.requirement.max_size(),
        PlanModel::Timevar { profile, .. } => profile
            .laws()
            .iter()
            .map(Pmf::support_max)
            .max()
            .unwrap_or(0)
            .max(1) as u32,
        PlanModel::Delay { .. } => 1,
    }
}

fn check_request(req: &PlanRequest) -> Result<()> {
    check_alpha(req.alpha)?;
    if !(req.epsilon > 0.0 && req.epsilon <= 1.0) {
        return Err(Error::Domain(format!(
            "blocking target {} outside (0, 1]",
            req.epsilon
        )));
    }
    Ok(())
}

/// Smallest `C >= c_start` with `P(S > C/α) <= ε`. The demand law is solved
/// once and only re-queried as `C` grows, except for the delay chain whose
/// law depends on `C`.
pub fn plan_capacity(req: &PlanRequest) -> Result<u32> {
    check_request(req)?;
    let curve = Curve::build(&req.model)?;
    let start = req.c_start.unwrap_or_else(|| default_c_start(&req.model));
    let (floor, reach) = curve.floor(req.alpha);
    if floor > req.epsilon {
        return Err(Error::Infeasible(format!(
            "target {} is below the truncation floor {floor:e}",
            req.epsilon
        )));
    }
    let upper = reach.max(start) + 1;
    let meets = |c: u32| -> Result<bool> { Ok(curve.blocking(c, req.alpha)? <= req.epsilon) };
    match req.search {
        SearchMode::Linear => {
            let mut c = start;
            while !meets(c)? {
                c += 1;
                if c > upper {
                    return Err(Error::Infeasible(format!(
                        "no capacity up to {upper} meets target {}",
                        req.epsilon
                    )));
                }
            }
            Ok(c)
        }
        SearchMode::Bisection => {
            if meets(start)? {
                return Ok(start);
            }
            if !meets(upper)? {
                return Err(Error::Infeasible(format!(
                    "no capacity up to {upper} meets target {}",
                    req.epsilon
                )));
            }
            // Invariant: lo fails, hi meets.
            let (mut lo, mut hi) = (start, upper);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if meets(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(hi)
        }
    }
}

/// One capacity of a sweep. Columns are absent when the model cannot
/// provide them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub capacity: u32,
    pub blocking_emlm: Option<f64>,
    pub blocking_mdf_consistent: Option<f64>,
    pub blocking_mdf_literal: Option<f64>,
    pub blocking_sim_mean: Option<f64>,
    pub blocking_sim_ci95: Option<f64>,
    pub blocking_sim_std_error: Option<f64>,
}

impl SweepRow {
    /// MDF column for the requested rate mode.
    pub fn blocking_mdf(&self, mode: RateMode) -> Option<f64> {
        match mode {
            RateMode::Consistent => self.blocking_mdf_consistent,
            RateMode::Literal => self.blocking_mdf_literal,
        }
    }
}

/// Blocking of the loss model, both slotted-chain rate modes and, when a
/// simulation template is given, the simulator at every grid capacity.
/// The simulation template's community is used for the simulated column;
/// its capacity is replaced by each grid value.
pub fn sweep_curve(
    req: &PlanRequest,
    grid: &[u32],
    sim: Option<&SimConfig>,
) -> Result<Vec<SweepRow>> {
    check_alpha(req.alpha)?;
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage("capacity grid must be increasing".into()));
    }
    let (emlm, consistent, literal) =
        match &req.model {
            PlanModel::Emlm { .. } => (Some(Curve::build(&req.model)?), None, None),
            PlanModel::Mdf { params, .. } => {
                let loss = EmlmParams {
                    alpha: 1.0,
                    ..params.to_emlm(0, 1.0)?
                };
                (
                    Some(Curve::Fixed(kaufman_roberts_solve(
                        &loss,
                        default_j_max(&loss)?,
                    )?)),
                    Some(Curve::Fixed(stationary_pmf(
                        params,
                        RateMode::Consistent,
                        DEFAULT_TOL,
                    )?)),
                    Some(Curve::Fixed(stationary_pmf(
                        params,
                        RateMode::Literal,
                        DEFAULT_TOL,
                    )?)),
                )
            }
            _ => return Err(Error::Usage(
                "sweeps compare the loss model with the slotted chain; use an emlm or mdf model"
                    .into(),
            )),
        };
    let column = |curve: &Option<Curve>, c: u32| -> Result<Option<f64>> {
        curve.as_ref().map(|k| k.blocking(c, req.alpha)).transpose()
    };

    let simulated = match sim {
        None => None,
        Some(template) => {
            let template = SimConfig {
                policy: match template.policy {
                    Policy::Tolerance { .. } => Policy::Tolerance { alpha: req.alpha },
                    Policy::Delay { .. } => Policy::Delay { alpha: req.alpha },
                },
                ..template.clone()
            };
            Some(match template.policy {
                Policy::Tolerance { .. } => simulate_tolerance_sweep(&template, grid)?,
                Policy::Delay { .. } => grid
                    .iter()
                    .map(|&c| {
                        simulate(&SimConfig {
                            capacity: c,
                            ..template.clone()
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            })
        }
    };

    grid.iter()
        .enumerate()
        .map(|(i, &c)| {
            let sim_row = simulated.as_ref().map(|s| &s[i]);
            Ok(SweepRow {
                capacity: c,
                blocking_emlm: column(&emlm, c)?,
                blocking_mdf_consistent: column(&consistent, c)?,
                blocking_mdf_literal: column(&literal, c)?,
                blocking_sim_mean: sim_row.map(|r| r.blocking_estimate),
                blocking_sim_ci95: sim_row.map(|r| r.ci95_half_width),
                blocking_sim_std_error: sim_row.map(|r| r.std_error),
            })
        })
        .collect()
}
