//! Scenario files.
//!
//! A scenario is a TOML document with a `[model]` table, an optional
//! `[policy]` table and an optional `[run]` table. Unknown keys are
//! rejected, and every invariant is checked before any computation starts.
//!
//! ```toml
//! [model]
//! kind = "mdf"          # emlm | mdf | timevar | delay
//! lambda = 0.001
//! population = 10000
//! mu = 0.5
//! slot = 0.0001
//! sizes = [1, 3, 5, 7, 9, 11]
//! probs = [0.15, 0.1, 0.3, 0.25, 0.15, 0.05]
//!
//! [policy]
//! kind = "tolerance"    # tolerance | delay
//! alpha = 1.0
//! capacity = 112
//! epsilon = 0.05
//!
//! [run]
//! seed = 7
//! slots = 2000000
//! replications = 10
//! grid = "90:150:5"
//! ```

use std::ops::Range;
use std::path::Path;

use mdf_erlang::planner::{PlanModel, SearchMode};
use mdf_erlang::sim::RequirementMode;
use mdf_erlang::{
    compound_poisson_pmf, EmlmParams, MdfParams, Pmf, RateMode, RequirementDistribution,
    TimeVaryingProfile, DEFAULT_TOL,
};
use serde::Deserialize;
use toml::Spanned;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    #[default]
    Tolerance,
    Delay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModelKind {
    Emlm,
    Mdf,
    Timevar,
    Delay,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    model: Spanned<RawModel>,
    policy: Option<Spanned<RawPolicy>>,
    run: Option<Spanned<RawRun>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: ModelKind,
    lambda: Option<f64>,
    population: Option<u64>,
    mu: Option<f64>,
    slot: Option<f64>,
    stay_prob: Option<f64>,
    sizes: Option<Vec<u32>>,
    probs: Option<Vec<f64>>,
    /// Time-varying requirement laws, one mass vector per elapsed slot.
    laws: Option<Vec<Vec<f64>>>,
    /// Delay model: per-slot demand law as a mass vector.
    increment: Option<Vec<f64>>,
    /// Delay model: mean arrivals per slot when the increment is built from
    /// `sizes` and `probs`.
    arrivals: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    kind: Option<PolicyKind>,
    alpha: Option<f64>,
    capacity: Option<u32>,
    epsilon: Option<f64>,
    c_start: Option<u32>,
    search: Option<SearchMode>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawGrid {
    Range(String),
    List(Vec<u32>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    seed: Option<u64>,
    slots: Option<u64>,
    burn_in: Option<u64>,
    replications: Option<u32>,
    grid: Option<RawGrid>,
    convergence_slots: Option<Vec<f64>>,
    mode: Option<RateMode>,
    output: Option<String>,
    format: Option<Format>,
    with_simulation: Option<bool>,
    requirement_mode: Option<RequirementMode>,
    j_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Emlm(EmlmParams),
    Mdf {
        params: MdfParams,
        mu: Option<f64>,
    },
    Timevar {
        lambda: f64,
        population: u64,
        profile: TimeVaryingProfile,
    },
    Delay {
        increment: Pmf,
    },
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Emlm(_) => "emlm",
            Model::Mdf { .. } => "mdf",
            Model::Timevar { .. } => "timevar",
            Model::Delay { .. } => "delay",
        }
    }

    pub fn to_plan_model(&self, mode: RateMode) -> PlanModel {
        match self {
            Model::Emlm(params) => PlanModel::Emlm {
                params: params.clone(),
            },
            Model::Mdf { params, .. } => PlanModel::Mdf {
                params: params.clone(),
                mode,
            },
            Model::Timevar {
                lambda,
                population,
                profile,
            } => PlanModel::Timevar {
                lambda: *lambda,
                population: *population,
                profile: profile.clone(),
            },
            Model::Delay { increment } => PlanModel::Delay {
                increment: increment.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub kind: PolicyKind,
    pub alpha: f64,
    pub capacity: Option<u32>,
    pub epsilon: Option<f64>,
    pub c_start: Option<u32>,
    pub search: SearchMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub seed: u64,
    pub slots: Option<u64>,
    pub burn_in: Option<u64>,
    pub replications: u32,
    pub grid: Option<Vec<u32>>,
    pub convergence_slots: Vec<f64>,
    pub mode: RateMode,
    pub output: Option<String>,
    pub format: Option<Format>,
    pub with_simulation: bool,
    pub requirement_mode: RequirementMode,
    pub j_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: Model,
    pub policy: Policy,
    pub run: Run,
}

/// Command-line values that replace scenario entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid: Option<String>,
    pub mode: Option<RateMode>,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
}

/// Parses `a:b:step` into the inclusive grid `a, a+step, ..., <= b`.
pub fn parse_grid(text: &str) -> Result<Vec<u32>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(format!("grid `{text}` is not of the form a:b:step"));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|_| format!("grid `{text}`: `{s}` is not a non-negative integer"))
    };
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if step == 0 {
        return Err(format!("grid `{text}`: step must be positive"));
    }
    if a > b {
        return Err(format!("grid `{text}`: start exceeds end"));
    }
    Ok((a..=b).step_by(step as usize).collect())
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

struct Located<'a> {
    text: &'a str,
    origin: &'a str,
}

impl Located<'_> {
    fn err(&self, span: Range<usize>, msg: impl std::fmt::Display) -> CliError {
        CliError::Malformed(format!(
            "{}:{}: {msg}",
            self.origin,
            line_of(self.text, span)
        ))
    }
}

impl Scenario {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Malformed(format!("cannot read scenario {}: {e}", path.display()))
        })?;
        Self::parse(&text, &path.display().to_string(), overrides)
    }

    /// Parses and validates a scenario; `origin` prefixes error messages.
    pub fn parse(text: &str, origin: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| format!("{}:", line_of(text, s)))
                .unwrap_or_default();
            CliError::Malformed(format!("{origin}:{line} {}", e.message().trim_end()))
        })?;
        let at = Located { text, origin };

        let (policy_span, raw_policy) = match raw.policy {
            Some(p) => (p.span(), p.into_inner()),
            None => (0..0, RawPolicy::default()),
        };
        let alpha = overrides.alpha.or(raw_policy.alpha).unwrap_or(1.0);
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(at.err(policy_span, format!("policy alpha {alpha} outside (0, 1]")));
        }
        let epsilon = overrides.epsilon.or(raw_policy.epsilon);
        if let Some(eps) = epsilon {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(at.err(policy_span, format!("policy epsilon {eps} outside (0, 1]")));
            }
        }
        if raw_policy.c_start == Some(0) {
            return Err(at.err(policy_span, "policy c_start must be positive"));
        }
        let policy = Policy {
            kind: raw_policy.kind.unwrap_or_default(),
            alpha,
            capacity: raw_policy.capacity,
            epsilon,
            c_start: raw_policy.c_start,
            search: raw_policy.search.unwrap_or_default(),
        };

        let model_span = raw.model.span();
        let model = build_model(raw.model.into_inner(), policy.capacity.unwrap_or(0), alpha)
            .map_err(|m| at.err(model_span, m))?;

        let (run_span, raw_run) = match raw.run {
            Some(r) => (r.span(), r.into_inner()),
            None => (0..0, RawRun::default()),
        };
        let grid = match (&overrides.grid, raw_run.grid) {
            (Some(g), _) => Some(parse_grid(g).map_err(CliError::Malformed)?),
            (None, Some(RawGrid::Range(g))) => {
                Some(parse_grid(&g).map_err(|m| at.err(run_span.clone(), m))?)
            }
            (None, Some(RawGrid::List(g))) => {
                if g.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(at.err(run_span, "run grid must be strictly increasing"));
                }
                Some(g)
            }
            (None, None) => None,
        };
        let convergence_slots = raw_run
            .convergence_slots
            .unwrap_or_else(|| vec![0.1, 0.01, 0.001]);
        if convergence_slots
            .iter()
            .any(|&s| !(s.is_finite() && s > 0.0))
            || convergence_slots.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(at.err(
                run_span,
                "run convergence_slots must be positive and strictly decreasing",
            ));
        }
        if raw_run.slots == Some(0) || raw_run.replications == Some(0) {
            return Err(at.err(run_span, "run slots and replications must be positive"));
        }
        let run = Run {
            seed: overrides.seed.or(raw_run.seed).unwrap_or(0),
            slots: raw_run.slots,
            burn_in: raw_run.burn_in,
            replications: raw_run.replications.unwrap_or(10),
            grid,
            convergence_slots,
            mode: overrides.mode.or(raw_run.mode).unwrap_or_default(),
            output: raw_run.output,
            format: raw_run.format,
            with_simulation: raw_run.with_simulation.unwrap_or(false),
            requirement_mode: raw_run.requirement_mode.unwrap_or_default(),
            j_max: raw_run.j_max,
        };
        Ok(Scenario { model, policy, run })
    }
}

fn require<T>(value: Option<T>, kind: &str, key: &str) -> Result<T, String> {
    value.ok_or_else(|| format!("model kind `{kind}` needs `{key}`"))
}

fn reject(present: bool, kind: &str, key: &str) -> Result<(), String> {
    if present {
        Err(format!("model kind `{kind}` does not use `{key}`"))
    } else {
        Ok(())
    }
}

fn requirement(m: &mut RawModel, kind: &str) -> Result<RequirementDistribution, String> {
    let sizes = require(m.sizes.take(), kind, "sizes")?;
    let probs = require(m.probs.take(), kind, "probs")?;
    RequirementDistribution::new(sizes, probs).map_err(|e| e.to_string())
}

fn mass_vector(masses: Vec<f64>, what: &str) -> Result<Pmf, String> {
    Pmf::new(masses, 0.0).map_err(|e| format!("{what}: {e}"))
}

fn build_model(mut m: RawModel, capacity: u32, alpha: f64) -> Result<Model, String> {
    match m.kind {
        ModelKind::Emlm => {
            let k = "emlm";
            for (present, key) in [
                (m.slot.is_some(), "slot"),
                (m.stay_prob.is_some(), "stay_prob"),
                (m.laws.is_some(), "laws"),
                (m.increment.is_some(), "increment"),
                (m.arrivals.is_some(), "arrivals"),
            ] {
                reject(present, k, key)?;
            }
            let params = EmlmParams {
                lambda_per_user: require(m.lambda, k, "lambda")?,
                population: require(m.population, k, "population")?,
                mu: require(m.mu, k, "mu")?,
                requirement: requirement(&mut m, k)?,
                alpha,
                capacity,
            };
            params.validate().map_err(|e| e.to_string())?;
            Ok(Model::Emlm(params))
        }
        ModelKind::Mdf => {
            let k = "mdf";
            for (present, key) in [
                (m.laws.is_some(), "laws"),
                (m.increment.is_some(), "increment"),
                (m.arrivals.is_some(), "arrivals"),
            ] {
                reject(present, k, key)?;
            }
            let lambda = require(m.lambda, k, "lambda")?;
            let population = require(m.population, k, "population")?;
            let slot = require(m.slot, k, "slot")?;
            let req = requirement(&mut m, k)?;
            let params = match (m.mu, m.stay_prob) {
                (Some(mu), None) => MdfParams::from_service_rate(lambda, population, mu, slot, req),
                (None, Some(stay_prob)) => {
                    let p = MdfParams {
                        lambda_per_user: lambda,
                        population,
                        slot,
                        stay_prob,
                        requirement: req,
                    };
                    p.validate().map(|_| p)
                }
                _ => {
                    return Err("model kind `mdf` needs exactly one of `mu` and `stay_prob`".into())
                }
            }
            .map_err(|e| e.to_string())?;
            Ok(Model::Mdf { params, mu: m.mu })
        }
        ModelKind::Timevar => {
            let k = "timevar";
            for (present, key) in [
                (m.mu.is_some(), "mu"),
                (m.slot.is_some(), "slot"),
                (m.stay_prob.is_some(), "stay_prob"),
                (m.sizes.is_some(), "sizes"),
                (m.probs.is_some(), "probs"),
                (m.increment.is_some(), "increment"),
                (m.arrivals.is_some(), "arrivals"),
            ] {
                reject(present, k, key)?;
            }
            let lambda = require(m.lambda, k, "lambda")?;
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(format!("arrival rate {lambda}"));
            }
            let population = require(m.population, k, "population")?;
            let laws = require(m.laws, k, "laws")?
                .into_iter()
                .enumerate()
                .map(|(s, w)| mass_vector(w, &format!("law W({s})")))
                .collect::<Result<Vec<_>, _>>()?;
            let profile = TimeVaryingProfile::new(laws).map_err(|e| e.to_string())?;
            Ok(Model::Timevar {
                lambda,
                population,
                profile,
            })
        }
        ModelKind::Delay => {
            let k = "delay";
            for (present, key) in [
                (m.lambda.is_some(), "lambda"),
                (m.population.is_some(), "population"),
                (m.mu.is_some(), "mu"),
                (m.slot.is_some(), "slot"),
                (m.stay_prob.is_some(), "stay_prob"),
                (m.laws.is_some(), "laws"),
            ] {
                reject(present, k, key)?;
            }
            let increment = match (m.increment.take(), m.arrivals) {
                (Some(masses), None) => {
                    reject(
                        m.sizes.is_some() || m.probs.is_some(),
                        k,
                        "sizes/probs with `increment`",
                    )?;
                    mass_vector(masses, "increment")?
                }
                (None, Some(rate)) => {
                    let req = requirement(&mut m, k)?;
                    compound_poisson_pmf(rate, &req, DEFAULT_TOL).map_err(|e| e.to_string())?
                }
                _ => {
                    return Err(
                        "model kind `delay` needs exactly one of `increment` and `arrivals`".into(),
                    )
                }
            };
            Ok(Model::Delay { increment })
        }
    }
}
