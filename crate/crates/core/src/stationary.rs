//! Stationary total demand of the discrete-time MDF(λ, p, t_s) community and
//! its distance to the continuous-time loss model as the slot shrinks.

use serde::{Deserialize, Serialize};

use crate::emlm::{check_alpha, default_j_max, emlm_blocking, EmlmParams};
use crate::error::{Error, Result};
use crate::pmf::{compound_poisson_from_pmf, tail_prob, Pmf, RequirementDistribution, DEFAULT_TOL};

/// Description of an MDF(λ, p, t_s) community.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdfParams {
    pub lambda_per_user: f64,
    pub population: u64,
    /// Slot length `t_s`.
    pub slot: f64,
    /// Probability that an active user stays for one more slot.
    pub stay_prob: f64,
    pub requirement: RequirementDistribution,
}

/// Which per-class Poisson rate the stationary law uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMode {
    /// `λ t_s N a_k / (1 - p)`: the exact stationary law of the slot chain.
    #[default]
    Consistent,
    /// `λ t_s N a_k (1 - p t_s / ln p)`, the closed form as printed.
    Literal,
}

impl std::str::FromStr for RateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(Self::Consistent),
            "literal" => Ok(Self::Literal),
            other => Err(Error::Usage(format!("unknown rate mode `{other}`"))),
        }
    }
}

impl MdfParams {
    /// Community whose stay probability is derived from an exponential
    /// holding time, `p = e^{-μ t_s}`.
    pub fn from_service_rate(
        lambda_per_user: f64,
        population: u64,
        mu: f64,
        slot: f64,
        requirement: RequirementDistribution,
    ) -> Result<Self> {
        let params = Self {
            lambda_per_user,
            population,
            slot,
            stay_prob: slot_survival_prob(mu, slot)?,
            requirement,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_per_user.is_finite() && self.lambda_per_user >= 0.0) {
            return Err(Error::Domain(format!(
                "arrival rate {}",
                self.lambda_per_user
            )));
        }
        if self.population == 0 {
            return Err(Error::Domain("population must be positive".into()));
        }
        if !(self.slot.is_finite() && self.slot > 0.0) {
            return Err(Error::Domain(format!("slot length {}", self.slot)));
        }
        if self.stay_prob == 1.0 {
            return Err(Error::Divergence(
                "stay probability 1 gives an infinite active population".into(),
            ));
        }
        if !(self.stay_prob > 0.0 && self.stay_prob < 1.0) {
            return Err(Error::Domain(format!(
                "stay probability {}",
                self.stay_prob
            )));
        }
        Ok(())
    }

    /// Mean arrivals per slot, `λ t_s N`.
    pub fn arrivals_per_slot(&self) -> f64 {
        self.lambda_per_user * self.slot * self.population as f64
    }

    /// Total Poisson rate of the active-user count under `mode`.
    pub fn active_rate(&self, mode: RateMode) -> Result<f64> {
        self.validate()?;
        let p = self.stay_prob;
        Ok(match mode {
            RateMode::Consistent => self.arrivals_per_slot() / (1.0 - p),
            RateMode::Literal => self.arrivals_per_slot() * (1.0 - p * self.slot / p.ln()),
        })
    }

    /// Service rate implied by the stay probability, `-ln p / t_s`.
    pub fn implied_mu(&self) -> Result<f64> {
        implied_mu(self.stay_prob, self.slot)
    }

    /// Loss-model parameters with the same arrivals and the implied service rate.
    pub fn to_emlm(&self, capacity: u32, alpha: f64) -> Result<EmlmParams> {
        Ok(EmlmParams {
            lambda_per_user: self.lambda_per_user,
            population: self.population,
            mu: self.implied_mu()?,
            requirement: self.requirement.clone(),
            alpha,
            capacity,
        })
    }
}

/// Probability that an `Exp(μ)` holding time outlasts one slot.
pub fn slot_survival_prob(mu: f64, slot: f64) -> Result<f64> {
    if !(mu.is_finite() && mu > 0.0 && slot.is_finite() && slot > 0.0) {
        return Err(Error::Domain(format!("service rate {mu} / slot {slot}")));
    }
    Ok((-mu * slot).exp())
}

/// Inverse of [`slot_survival_prob`].
pub fn implied_mu(stay_prob: f64, slot: f64) -> Result<f64> {
    if !(stay_prob > 0.0 && stay_prob < 1.0 && slot.is_finite() && slot > 0.0) {
        return Err(Error::Domain(format!(
            "stay probability {stay_prob} / slot {slot}"
        )));
    }
    Ok(-stay_prob.ln() / slot)
}

/// Law of the total demand `Σ_k b_k P_k` with independent Poisson counts.
pub fn stationary_pmf(params: &MdfParams, mode: RateMode, tol: f64) -> Result<Pmf> {
    let rate = params.active_rate(mode)?;
    let cap = (params.population as usize).saturating_mul(params.requirement.max_size() as usize);
    let pmf = compound_poisson_from_pmf(rate, &params.requirement.to_pmf(), tol, Some(cap))?;
    // Demand above N max b is impossible; mass cut there is renormalized away.
    Ok(if pmf.j_max() == cap && pmf.tail_mass() > tol {
        pmf.renormalized()
    } else {
        pmf
    })
}

/// `P(S > C/α)` under the stationary demand law.
pub fn blocking_prob(params: &MdfParams, capacity: u32, alpha: f64, mode: RateMode) -> Result<f64> {
    check_alpha(alpha)?;
    let pmf = stationary_pmf(params, mode, DEFAULT_TOL)?;
    Ok(tail_prob(&pmf, capacity as f64 / alpha))
}

/// One row of a slot-refinement study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub slot: f64,
    pub stay_prob: f64,
    pub blocking_mdf: f64,
    pub blocking_emlm: f64,
    /// `|blocking_mdf - blocking_emlm|`.
    pub delta: f64,
}

/// Distance between the slotted and the continuous-time blocking for each
/// slot length, with `p = e^{-μ t_s}`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_report(
    lambda: f64,
    mu: f64,
    population: u64,
    requirement: &RequirementDistribution,
    slots: &[f64],
    capacity: u32,
    alpha: f64,
    mode: RateMode,
) -> Result<Vec<ConvergencePoint>> {
    if slots.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Usage(
            "slot lengths must be strictly decreasing".into(),
        ));
    }
    let emlm = EmlmParams {
        lambda_per_user: lambda,
        population,
        mu,
        requirement: requirement.clone(),
        alpha,
        capacity,
    };
    let blocking_emlm = emlm_blocking(&emlm, default_j_max(&emlm)?)?;
    slots
        .iter()
        .map(|&slot| {
            let params =
                MdfParams::from_service_rate(lambda, population, mu, slot, requirement.clone())?;
            let blocking_mdf = blocking_prob(&params, capacity, alpha, mode)?;
            Ok(ConvergencePoint {
                slot,
                stay_prob: params.stay_prob,
                blocking_mdf,
                blocking_emlm,
                delta: (blocking_mdf - blocking_emlm).abs(),
            })
        })
        .collect()
}
