use mdf_erlang::planner::{default_c_start, plan_capacity, sweep_curve, PlanRequest, SweepRow};
use mdf_erlang::sim::{default_burn_in, simulate, Policy as SimPolicy, SimConfig, SimResult};
use mdf_erlang::{
    convergence_report, default_j_max, delay_stationary, kaufman_roberts_solve, stationary_pmf,
    tail_prob, tolerance_blocking, DelayChainParams, EmlmParams, MdfParams, Pmf, RateMode,
    DEFAULT_TOL,
};
use serde::Serialize;

use crate::error::CliError;
use crate::report::{Cell, Report, Table};
use crate::scenario::{Model, PolicyKind, Scenario};

pub const SWEEP_HEADER: &str =
    "C,blocking_emlm,blocking_mdf,blocking_sim_mean,blocking_sim_ci95_lo,blocking_sim_ci95_hi";

const DELAY_TOL: f64 = 1e-12;
const DELAY_MAX_ITERS: usize = 200_000;

/// Result of a subcommand: a report, an optional summary line for stdout,
/// and a model failure to surface after the report is written.
pub struct Outcome {
    pub report: Option<Report>,
    pub summary: Option<String>,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn report(report: Report) -> Self {
        Self {
            report: Some(report),
            summary: None,
            failure: None,
        }
    }
}

fn capacity(s: &Scenario) -> Result<u32, CliError> {
    s.policy
        .capacity
        .ok_or_else(|| CliError::Malformed("this command needs `capacity` in [policy]".into()))
}

fn wrong_model(command: &str, s: &Scenario, expected: &str) -> CliError {
    CliError::Malformed(format!(
        "{command} needs a {expected} model, the scenario has `{}`",
        s.model.kind()
    ))
}

fn mdf_params<'a>(command: &str, s: &'a Scenario) -> Result<&'a MdfParams, CliError> {
    match &s.model {
        Model::Mdf { params, .. } => Ok(params),
        _ => Err(wrong_model(command, s, "mdf")),
    }
}

#[derive(Serialize)]
struct EmlmReport<'a> {
    capacity: u32,
    alpha: f64,
    offered_load: f64,
    j_max: usize,
    blocking: f64,
    occupancy: &'a Pmf,
}

pub fn solve_emlm(s: &Scenario) -> Result<Outcome, CliError> {
    let c = capacity(s)?;
    let params = match &s.model {
        Model::Emlm(p) => EmlmParams {
            capacity: c,
            alpha: s.policy.alpha,
            ..p.clone()
        },
        Model::Mdf { params, .. } => params.to_emlm(c, s.policy.alpha)?,
        _ => return Err(wrong_model("solve-emlm", s, "emlm or mdf")),
    };
    let j_max = match s.run.j_max {
        Some(j) => j,
        None => default_j_max(&params)?,
    };
    let q = kaufman_roberts_solve(&params, j_max)?;
    let blocking = tail_prob(&q, c as f64 / params.alpha);
    let mut table = Table::new("capacity,alpha,j_max,blocking");
    table.push(vec![
        Cell::Int(c as u64),
        Cell::Float(params.alpha),
        Cell::Int(j_max as u64),
        Cell::Float(blocking),
    ]);
    let value = EmlmReport {
        capacity: c,
        alpha: params.alpha,
        offered_load: params.offered_load(),
        j_max,
        blocking,
        occupancy: &q,
    };
    Ok(Outcome::report(Report::new(table, &value)?))
}

#[derive(Serialize)]
struct MdfReport {
    capacity: u32,
    alpha: f64,
    mode: RateMode,
    stay_prob: f64,
    active_rate: f64,
    mean_demand: f64,
    blocking: f64,
}

pub fn mdf_blocking(s: &Scenario) -> Result<Outcome, CliError> {
    let c = capacity(s)?;
    let params = mdf_params("mdf-blocking", s)?;
    let mode = s.run.mode;
    let pmf = stationary_pmf(params, mode, DEFAULT_TOL)?;
    let blocking = tail_prob(&pmf, c as f64 / s.policy.alpha);
    let mode_name = match mode {
        RateMode::Consistent => "consistent",
        RateMode::Literal => "literal",
    };
    let mut table = Table::new("capacity,alpha,mode,blocking");
    table.push(vec![
        Cell::Int(c as u64),
        Cell::Float(s.policy.alpha),
        Cell::Text(mode_name.into()),
        Cell::Float(blocking),
    ]);
    let value = MdfReport {
        capacity: c,
        alpha: s.policy.alpha,
        mode,
        stay_prob: params.stay_prob,
        active_rate: params.active_rate(mode)?,
        mean_demand: pmf.mean(),
        blocking,
    };
    Ok(Outcome::report(Report::new(table, &value)?))
}

#[derive(Serialize)]
struct TimevarReport {
    capacity: u32,
    alpha: f64,
    horizon: usize,
    blocking: f64,
    nontolerance_blocking: f64,
}

pub fn timevar_blocking(s: &Scenario) -> Result<Outcome, CliError> {
    let c = capacity(s)?;
    let Model::Timevar {
        lambda,
        population,
        profile,
    } = &s.model
    else {
        return Err(wrong_model("timevar-blocking", s, "timevar"));
    };
    let blocking = tolerance_blocking(
        *lambda,
        *population,
        profile,
        c,
        s.policy.alpha,
        DEFAULT_TOL,
    )?;
    let nontolerance = tolerance_blocking(*lambda, *population, profile, c, 1.0, DEFAULT_TOL)?;
    let mut table = Table::new("capacity,alpha,blocking");
    table.push(vec![
        Cell::Int(c as u64),
        Cell::Float(s.policy.alpha),
        Cell::Float(blocking),
    ]);
    let value = TimevarReport {
        capacity: c,
        alpha: s.policy.alpha,
        horizon: profile.horizon(),
        blocking,
        nontolerance_blocking: nontolerance,
    };
    Ok(Outcome::report(Report::new(table, &value)?))
}

#[derive(Serialize)]
struct DelayReport<'a> {
    capacity: u32,
    alpha: f64,
    utilization: f64,
    blocking: f64,
    stationary: &'a Pmf,
}

pub fn delay_blocking(s: &Scenario) -> Result<Outcome, CliError> {
    let c = capacity(s)?;
    let Model::Delay { increment } = &s.model else {
        return Err(wrong_model("delay-blocking", s, "delay"));
    };
    let params = DelayChainParams {
        increment: increment.clone(),
        capacity: c,
        alpha: s.policy.alpha,
    };
    let pi = delay_stationary(&params, DELAY_TOL, DELAY_MAX_ITERS)?;
    let blocking = tail_prob(&pi, c as f64 / s.policy.alpha);
    let mut table = Table::new("capacity,alpha,blocking");
    table.push(vec![
        Cell::Int(c as u64),
        Cell::Float(s.policy.alpha),
        Cell::Float(blocking),
    ]);
    let value = DelayReport {
        capacity: c,
        alpha: s.policy.alpha,
        utilization: params.utilization(),
        blocking,
        stationary: &pi,
    };
    Ok(Outcome::report(Report::new(table, &value)?))
}

fn sim_template(s: &Scenario, params: &MdfParams, capacity: u32) -> Result<SimConfig, CliError> {
    let slots = s
        .run
        .slots
        .ok_or_else(|| CliError::Malformed("simulation needs `slots` in [run]".into()))?;
    let policy = match s.policy.kind {
        PolicyKind::Tolerance => SimPolicy::Tolerance {
            alpha: s.policy.alpha,
        },
        PolicyKind::Delay => SimPolicy::Delay {
            alpha: s.policy.alpha,
        },
    };
    Ok(SimConfig {
        params: params.clone(),
        policy,
        capacity,
        slots,
        burn_in: s
            .run
            .burn_in
            .unwrap_or_else(|| default_burn_in(params.stay_prob)),
        seed: s.run.seed,
        replications: s.run.replications,
        requirement_mode: s.run.requirement_mode,
    })
}

pub fn simulate_cmd(s: &Scenario) -> Result<Outcome, CliError> {
    let c = capacity(s)?;
    let params = mdf_params("simulate", s)?;
    let config = sim_template(s, params, c)?;
    let r: SimResult = simulate(&config)?;
    let mut table =
        Table::new("capacity,blocking_estimate,ci95_half_width,std_error,slots_observed,mean_active_users,unstable");
    table.push(vec![
        Cell::Int(c as u64),
        Cell::Float(r.blocking_estimate),
        Cell::Float(r.ci95_half_width),
        Cell::Float(r.std_error),
        Cell::Int(r.slots_observed),
        Cell::Float(r.mean_active_users),
        Cell::Text(r.unstable.to_string()),
    ]);
    let failure = r.unstable.then(|| {
        CliError::Model(format!(
            "backlog does not settle at capacity {c}: the delay system is unstable"
        ))
    });
    Ok(Outcome {
        report: Some(Report::new(table, &r)?),
        summary: None,
        failure,
    })
}

#[derive(Serialize)]
struct PlanReport {
    capacity: u32,
    alpha: f64,
    epsilon: f64,
    c_start: u32,
    model: &'static str,
}

pub fn plan(s: &Scenario) -> Result<Outcome, CliError> {
    let epsilon = s.policy.epsilon.ok_or_else(|| {
        CliError::Malformed("plan needs `epsilon` in [policy] or --epsilon".into())
    })?;
    let model = s.model.to_plan_model(s.run.mode);
    let c_start = s.policy.c_start.unwrap_or_else(|| default_c_start(&model));
    let req = PlanRequest {
        model,
        alpha: s.policy.alpha,
        epsilon,
        c_start: s.policy.c_start,
        search: s.policy.search,
    };
    let c = plan_capacity(&req)?;
    let mut table = Table::new("C,epsilon,alpha");
    table.push(vec![
        Cell::Int(c as u64),
        Cell::Float(epsilon),
        Cell::Float(s.policy.alpha),
    ]);
    let value = PlanReport {
        capacity: c,
        alpha: s.policy.alpha,
        epsilon,
        c_start,
        model: s.model.kind(),
    };
    Ok(Outcome {
        report: Some(Report::new(table, &value)?),
        summary: Some(format!("C = {c}")),
        failure: None,
    })
}

pub fn sweep(s: &Scenario) -> Result<Outcome, CliError> {
    let grid = s
        .run
        .grid
        .clone()
        .ok_or_else(|| CliError::Malformed("sweep needs `grid` in [run] or --grid".into()))?;
    if !matches!(s.model, Model::Emlm(_) | Model::Mdf { .. }) {
        return Err(wrong_model("sweep", s, "emlm or mdf"));
    }
    let template = match (&s.model, s.run.with_simulation) {
        (Model::Mdf { params, .. }, true) => {
            Some(sim_template(s, params, grid.first().copied().unwrap_or(0))?)
        }
        (_, true) => return Err(wrong_model("a simulated sweep", s, "mdf")),
        (_, false) => None,
    };
    let rows: Vec<SweepRow> = if grid.is_empty() {
        Vec::new()
    } else {
        let req = PlanRequest::new(s.model.to_plan_model(s.run.mode), s.policy.alpha, 1.0);
        sweep_curve(&req, &grid, template.as_ref())?
    };
    let mut table = Table::new(SWEEP_HEADER);
    for row in &rows {
        let (lo, hi) = match (row.blocking_sim_mean, row.blocking_sim_ci95) {
            (Some(m), Some(h)) => (Some((m - h).clamp(0.0, 1.0)), Some((m + h).clamp(0.0, 1.0))),
            _ => (None, None),
        };
        table.push(vec![
            Cell::Int(row.capacity as u64),
            row.blocking_emlm.into(),
            row.blocking_mdf(s.run.mode).into(),
            row.blocking_sim_mean.into(),
            lo.into(),
            hi.into(),
        ]);
    }
    Ok(Outcome::report(Report::new(table, &rows)?))
}

pub fn convergence(s: &Scenario) -> Result<Outcome, CliError> {
    let c = capacity(s)?;
    let (lambda, population, mu, requirement) = match &s.model {
        Model::Emlm(p) => (p.lambda_per_user, p.population, p.mu, &p.requirement),
        Model::Mdf { params, mu } => {
            let mu = match mu {
                Some(m) => *m,
                None => params.implied_mu()?,
            };
            (
                params.lambda_per_user,
                params.population,
                mu,
                &params.requirement,
            )
        }
        _ => return Err(wrong_model("convergence", s, "emlm or mdf")),
    };
    let points = convergence_report(
        lambda,
        mu,
        population,
        requirement,
        &s.run.convergence_slots,
        c,
        s.policy.alpha,
        s.run.mode,
    )?;
    let mut table = Table::new("slot,stay_prob,blocking_mdf,blocking_emlm,delta");
    for p in &points {
        table.push(vec![
            Cell::Float(p.slot),
            Cell::Float(p.stay_prob),
            Cell::Float(p.blocking_mdf),
            Cell::Float(p.blocking_emlm),
            Cell::Float(p.delta),
        ]);
    }
    Ok(Outcome::report(Report::new(table, &points)?))
}
