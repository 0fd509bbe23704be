//! WebAssembly bindings for the static page in `www/`.
//!
//! Every entry point describes the community by its per-user arrival rate,
//! population, service rate, slot length and requirement law. The plain
//! Rust functions carry the logic; the `#[wasm_bindgen]` wrappers only
//! convert errors.

use mdf_erlang::planner::{self, PlanModel, PlanRequest};
use mdf_erlang::{
    default_j_max, kaufman_roberts_solve, stationary_pmf, tail_prob, MdfParams, RateMode,
    RequirementDistribution, DEFAULT_TOL,
};
use wasm_bindgen::prelude::*;

pub struct Community {
    pub lambda: f64,
    pub population: u32,
    pub mu: f64,
    pub slot: f64,
    pub sizes: Vec<u32>,
    pub probs: Vec<f64>,
}

impl Community {
    fn params(&self) -> Result<MdfParams, String> {
        let req = RequirementDistribution::new(self.sizes.clone(), self.probs.clone())
            .map_err(|e| e.to_string())?;
        MdfParams::from_service_rate(self.lambda, self.population as u64, self.mu, self.slot, req)
            .map_err(|e| e.to_string())
    }
}

fn mode(name: &str) -> Result<RateMode, String> {
    name.parse().map_err(|e: mdf_erlang::Error| e.to_string())
}

/// Stationary law of the total demand.
pub fn demand_law(c: &Community, mode_name: &str) -> Result<Vec<f64>, String> {
    let pmf =
        stationary_pmf(&c.params()?, mode(mode_name)?, DEFAULT_TOL).map_err(|e| e.to_string())?;
    Ok(pmf.masses().to_vec())
}

/// Loss-model blocking followed by slotted-chain blocking for every
/// capacity in `c_min..=c_max`.
pub fn blocking_table(
    c: &Community,
    c_min: u32,
    c_max: u32,
    alpha: f64,
    mode_name: &str,
) -> Result<Vec<f64>, String> {
    if c_min > c_max {
        return Err("empty capacity range".into());
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(format!("alpha {alpha} outside (0, 1]"));
    }
    let params = c.params()?;
    let loss = params.to_emlm(0, 1.0).map_err(|e| e.to_string())?;
    let q = kaufman_roberts_solve(&loss, default_j_max(&loss).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let s = stationary_pmf(&params, mode(mode_name)?, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let grid = c_min..=c_max;
    let mut out: Vec<f64> = grid
        .clone()
        .map(|cap| tail_prob(&q, cap as f64 / alpha))
        .collect();
    out.extend(grid.map(|cap| tail_prob(&s, cap as f64 / alpha)));
    Ok(out)
}

/// Smallest capacity with blocking at most `epsilon`.
pub fn plan(c: &Community, alpha: f64, epsilon: f64, mode_name: &str) -> Result<u32, String> {
    let model = PlanModel::Mdf {
        params: c.params()?,
        mode: mode(mode_name)?,
    };
    planner::plan_capacity(&PlanRequest::new(model, alpha, epsilon)).map_err(|e| e.to_string())
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn demand_pmf(
    lambda: f64,
    population: u32,
    mu: f64,
    slot: f64,
    sizes: Vec<u32>,
    probs: Vec<f64>,
    mode: &str,
) -> Result<Vec<f64>, JsError> {
    demand_law(
        &Community {
            lambda,
            population,
            mu,
            slot,
            sizes,
            probs,
        },
        mode,
    )
    .map_err(js)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn blocking_curve(
    lambda: f64,
    population: u32,
    mu: f64,
    slot: f64,
    sizes: Vec<u32>,
    probs: Vec<f64>,
    c_min: u32,
    c_max: u32,
    alpha: f64,
    mode: &str,
) -> Result<Vec<f64>, JsError> {
    blocking_table(
        &Community {
            lambda,
            population,
            mu,
            slot,
            sizes,
            probs,
        },
        c_min,
        c_max,
        alpha,
        mode,
    )
    .map_err(js)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn plan_capacity(
    lambda: f64,
    population: u32,
    mu: f64,
    slot: f64,
    sizes: Vec<u32>,
    probs: Vec<f64>,
    alpha: f64,
    epsilon: f64,
    mode: &str,
) -> Result<u32, JsError> {
    plan(
        &Community {
            lambda,
            population,
            mu,
            slot,
            sizes,
            probs,
        },
        alpha,
        epsilon,
        mode,
    )
    .map_err(js)
}
