//! Finite probability mass functions on the non-negative integers.
//!
//! Every solver in this crate produces or consumes a [`Pmf`]: a vector of
//! masses indexed by value plus the probability that was truncated away
//! beyond the last index.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Default truncation tolerance for infinite supports.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Normalization slack accepted on constructed distributions.
pub const NORMALIZATION_SLACK: f64 = 1e-9;

/// Hard ceiling on the support length built by the recursions.
const MAX_SUPPORT: usize = 1 << 24;

/// Probability mass function supported on `0..masses.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    masses: Vec<f64>,
    tail_mass: f64,
}

impl Pmf {
    /// Builds a pmf and checks that it is non-negative and normalized.
    pub fn new(masses: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if masses.is_empty() && tail_mass == 0.0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if let Some((j, m)) = masses
            .iter()
            .enumerate()
            .find(|(_, m)| !m.is_finite() || **m < 0.0)
        {
            return Err(Error::InvalidDistribution(format!("mass {m} at {j}")));
        }
        if !tail_mass.is_finite() || tail_mass < 0.0 {
            return Err(Error::InvalidDistribution(format!("tail mass {tail_mass}")));
        }
        let total: f64 = masses.iter().sum::<f64>() + tail_mass;
        if (total - 1.0).abs() > NORMALIZATION_SLACK {
            return Err(Error::InvalidDistribution(format!(
                "total mass {total} is not 1"
            )));
        }
        Ok(Self { masses, tail_mass })
    }

    /// Builds a pmf from raw masses, assigning the deficit to the tail.
    pub(crate) fn from_masses(masses: Vec<f64>) -> Self {
        let total: f64 = masses.iter().sum();
        Self {
            masses,
            tail_mass: (1.0 - total).max(0.0),
        }
    }

    pub(crate) fn from_masses_with_tail(masses: Vec<f64>, tail_mass: f64) -> Self {
        Self { masses, tail_mass }
    }

    /// Unit mass at `value`.
    pub fn point(value: usize) -> Self {
        let mut masses = vec![0.0; value + 1];
        masses[value] = 1.0;
        Self {
            masses,
            tail_mass: 0.0,
        }
    }

    /// Pmf from `(value, probability)` pairs. Repeated values accumulate.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        let len = pairs.iter().map(|(v, _)| v + 1).max().unwrap_or(0);
        let mut masses = vec![0.0; len];
        for &(v, p) in pairs {
            masses[v] += p;
        }
        Self::new(masses, 0.0)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Largest representable value (`J_max`).
    pub fn j_max(&self) -> usize {
        self.masses.len().saturating_sub(1)
    }

    /// `P(S = j)`; zero outside the stored support.
    pub fn prob(&self, j: usize) -> f64 {
        self.masses.get(j).copied().unwrap_or(0.0)
    }

    /// Largest value carrying positive mass.
    pub fn support_max(&self) -> usize {
        self.masses.iter().rposition(|&m| m > 0.0).unwrap_or(0)
    }

    /// Mean over the stored support (the truncated tail is ignored).
    pub fn mean(&self) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(j, m)| j as f64 * m)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.masses
            .iter()
            .enumerate()
            .map(|(j, m)| (j as f64 - mean).powi(2) * m)
            .sum()
    }

    /// Sum of stored masses, excluding the tail.
    pub fn stored_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Rescales the stored masses to sum to one and clears the tail.
    pub fn renormalized(&self) -> Self {
        let total = self.stored_mass();
        Self {
            masses: self.masses.iter().map(|m| m / total).collect(),
            tail_mass: 0.0,
        }
    }

    /// Restricts the support to `0..=j_max` and renormalizes.
    pub fn truncated_renormalized(&self, j_max: usize) -> Self {
        let end = (j_max + 1).min(self.masses.len());
        let total: f64 = self.masses[..end].iter().sum();
        Self {
            masses: self.masses[..end].iter().map(|m| m / total).collect(),
            tail_mass: 0.0,
        }
    }

    /// Total-variation distance; tail masses are treated as one extra atom.
    pub fn total_variation(&self, other: &Pmf) -> f64 {
        let len = self.masses.len().max(other.masses.len());
        let body: f64 = (0..len).map(|j| (self.prob(j) - other.prob(j)).abs()).sum();
        0.5 * (body + (self.tail_mass - other.tail_mass).abs())
    }

    /// Largest pointwise difference over the union of supports.
    pub fn sup_distance(&self, other: &Pmf) -> f64 {
        let len = self.masses.len().max(other.masses.len());
        (0..len)
            .map(|j| (self.prob(j) - other.prob(j)).abs())
            .fold(0.0, f64::max)
    }

    /// Drops trailing values whose combined mass is below `cutoff` and
    /// renormalizes what remains.
    pub(crate) fn trim_tail_renormalized(&self, cutoff: f64) -> Self {
        let mut acc = 0.0;
        let mut end = self.masses.len();
        while end > 1 {
            let next = acc + self.masses[end - 1];
            if next >= cutoff {
                break;
            }
            acc = next;
            end -= 1;
        }
        let total: f64 = self.masses[..end].iter().sum();
        Self {
            masses: self.masses[..end].iter().map(|m| m / total).collect(),
            tail_mass: 0.0,
        }
    }
}

/// Law of a single activated user's demand: packet size `b_k` with
/// probability `a_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementDistribution {
    sizes: Vec<u32>,
    probs: Vec<f64>,
}

impl RequirementDistribution {
    /// Sizes must be strictly increasing and at least one; probabilities
    /// positive and summing to one within `1e-12`.
    pub fn new(sizes: Vec<u32>, probs: Vec<f64>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidDistribution("no requirement atoms".into()));
        }
        if sizes.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} sizes but {} probabilities",
                sizes.len(),
                probs.len()
            )));
        }
        if sizes[0] < 1 {
            return Err(Error::InvalidDistribution(
                "packet sizes must be at least 1".into(),
            ));
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDistribution(
                "packet sizes must be strictly increasing".into(),
            ));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "probability {p} is not positive"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { sizes, probs })
    }

    /// Single packet size with probability one.
    pub fn point(size: u32) -> Result<Self> {
        Self::new(vec![size], vec![1.0])
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn atoms(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.sizes.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn max_size(&self) -> u32 {
        *self.sizes.last().expect("non-empty by construction")
    }

    pub fn mean(&self) -> f64 {
        self.atoms().map(|(b, a)| b as f64 * a).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.atoms().map(|(b, a)| (b as f64).powi(2) * a).sum()
    }

    pub fn to_pmf(&self) -> Pmf {
        let mut masses = vec![0.0; self.max_size() as usize + 1];
        for (b, a) in self.atoms() {
            masses[b as usize] = a;
        }
        Pmf {
            masses,
            tail_mass: 0.0,
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("tolerance {tol} outside (0, 1)")))
    }
}

/// Poisson law truncated at the smallest support whose tail is below `tol`.
pub fn poisson_pmf(rate: f64, tol: f64) -> Result<Pmf> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::Domain(format!("Poisson rate {rate}")));
    }
    check_tol(tol)?;
    if rate == 0.0 {
        return Ok(Pmf::point(0));
    }
    // Anchor at the mode in log space, then walk the ratio recurrence both
    // ways so large rates do not underflow at zero.
    let mode = rate.floor() as usize;
    let at_mode = (mode as f64 * rate.ln() - rate - ln_gamma(mode as f64 + 1.0)).exp();
    let mut masses = vec![0.0; mode + 1];
    masses[mode] = at_mode;
    for j in (0..mode).rev() {
        masses[j] = masses[j + 1] * (j + 1) as f64 / rate;
    }
    let mut total: f64 = masses.iter().sum();
    let mut j = mode;
    while 1.0 - total >= tol {
        j += 1;
        if j > MAX_SUPPORT {
            return Err(Error::Domain(format!("Poisson rate {rate} too large")));
        }
        let next = masses[j - 1] * rate / j as f64;
        if next == 0.0 {
            break;
        }
        masses.push(next);
        total += next;
    }
    Ok(Pmf::from_masses(masses))
}

/// Exact convolution; the deficit of both operands lands in the tail.
pub fn convolve(a: &Pmf, b: &Pmf) -> Pmf {
    let (x, y) = (a.masses(), b.masses());
    if x.is_empty() || y.is_empty() {
        return Pmf::from_masses(Vec::new());
    }
    let mut out = vec![0.0; x.len() + y.len() - 1];
    for (i, &p) in x.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (j, &q) in y.iter().enumerate() {
            out[i + j] += p * q;
        }
    }
    Pmf::from_masses(out)
}

/// Compound Poisson law of `Σ_k b_k · Poi(rate · a_k)`.
pub fn compound_poisson_pmf(rate: f64, jumps: &RequirementDistribution, tol: f64) -> Result<Pmf> {
    compound_poisson_from_pmf(rate, &jumps.to_pmf(), tol, None)
}

/// Panjer recursion for a compound Poisson law with an arbitrary finite jump
/// pmf. Mass of the jump law at zero is folded into the rate. When `cap` is
/// given the support never extends beyond it, in which case the residual
/// mass is reported as tail even if it exceeds `tol`.
pub fn compound_poisson_from_pmf(
    rate: f64,
    jumps: &Pmf,
    tol: f64,
    cap: Option<usize>,
) -> Result<Pmf> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::Domain(format!("compound Poisson rate {rate}")));
    }
    check_tol(tol)?;
    if jumps.tail_mass() > DEFAULT_TOL {
        return Err(Error::Usage(format!(
            "jump law has truncated tail {}",
            jumps.tail_mass()
        )));
    }
    let f = jumps.masses();
    let effective = rate * (1.0 - jumps.prob(0));
    if effective <= 0.0 {
        return Ok(Pmf::point(0));
    }
    if effective > 700.0 {
        return Err(Error::Domain(format!(
            "compound Poisson load {effective} underflows double precision"
        )));
    }
    let limit = cap.unwrap_or(MAX_SUPPORT).min(MAX_SUPPORT);
    let weighted: Vec<f64> = f.iter().enumerate().map(|(i, p)| i as f64 * p).collect();
    let mut g = vec![(-effective).exp()];
    let mut total = g[0];
    let mut j = 0;
    while 1.0 - total >= tol {
        j += 1;
        if j > limit {
            if cap.is_some() {
                break;
            }
            return Err(Error::Domain(format!(
                "compound Poisson support exceeds {MAX_SUPPORT}"
            )));
        }
        let reach = j.min(weighted.len() - 1);
        let acc: f64 = (1..=reach).map(|i| weighted[i] * g[j - i]).sum();
        let next = rate * acc / j as f64;
        g.push(next);
        total += next;
    }
    Ok(Pmf::from_masses(g))
}

/// Pointwise weighted mixture of masses and tails.
pub fn mixture_pmf(components: &[Pmf], weights: &[f64]) -> Result<Pmf> {
    if components.len() != weights.len() {
        return Err(Error::Usage(format!(
            "{} components but {} weights",
            components.len(),
            weights.len()
        )));
    }
    if components.is_empty() {
        return Err(Error::Usage("empty mixture".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Usage("mixture weights must be non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Usage(format!("mixture weights sum to {total}")));
    }
    let len = components.iter().map(|c| c.masses.len()).max().unwrap_or(0);
    let mut masses = vec![0.0; len];
    let mut tail_mass = 0.0;
    for (c, &w) in components.iter().zip(weights) {
        for (m, x) in masses.iter_mut().zip(&c.masses) {
            *m += w * x;
        }
        tail_mass += w * c.tail_mass;
    }
    Ok(Pmf { masses, tail_mass })
}

/// `P(S > threshold)` including the truncated tail, clamped to `[0, 1]`.
pub fn tail_prob(p: &Pmf, threshold: f64) -> f64 {
    if threshold < 0.0 {
        return 1.0;
    }
    let first = threshold.floor() as usize + 1;
    let body: f64 = p
        .masses
        .get(first..)
        .map(|t| t.iter().rev().sum())
        .unwrap_or(0.0);
    (body + p.tail_mass).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn poisson_degenerate_and_closed_form() {
        let p = poisson_pmf(0.0, DEFAULT_TOL).unwrap();
        assert_eq!(p, Pmf::point(0));
        let p = poisson_pmf(1.0, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(p.prob(0), (-1.0f64).exp(), epsilon = 1e-15);
        assert!(p.tail_mass() < DEFAULT_TOL);
        assert!(matches!(poisson_pmf(-1.0, 1e-12), Err(Error::Domain(_))));
    }

    #[test]
    fn poisson_mean_matches_factorial_series() {
        // Oracle: masses from e^{-r} r^j / j! accumulated term by term with
        // compensated summation, far past the truncation point.
        let rate = 20.0f64;
        let mut term = (-rate).exp();
        let (mut mean, mut comp) = (0.0f64, 0.0f64);
        for j in 1..400 {
            term *= rate / j as f64;
            let y = j as f64 * term - comp;
            let t = mean + y;
            comp = (t - mean) - y;
            mean = t;
        }
        assert_abs_diff_eq!(mean, 20.0, epsilon = 1e-12);
        let p = poisson_pmf(rate, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(p.mean(), mean, epsilon = 1e-9);
    }

    #[test]
    fn poisson_large_rate_does_not_underflow() {
        let p = poisson_pmf(900.0, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(p.stored_mass() + p.tail_mass(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.mean(), 900.0, epsilon = 1e-6);
    }

    #[test]
    fn convolution_identities() {
        let p = poisson_pmf(2.5, DEFAULT_TOL).unwrap();
        assert_eq!(convolve(&p, &Pmf::point(0)).masses(), p.masses());
        assert_eq!(convolve(&Pmf::point(2), &Pmf::point(3)), Pmf::point(5));
        let sum = convolve(
            &poisson_pmf(1.0, DEFAULT_TOL).unwrap(),
            &poisson_pmf(2.0, DEFAULT_TOL).unwrap(),
        );
        let direct = poisson_pmf(3.0, DEFAULT_TOL).unwrap();
        assert!(sum.sup_distance(&direct) < 1e-10);
    }

    #[test]
    fn compound_poisson_unit_jumps_is_poisson() {
        let unit = RequirementDistribution::point(1).unwrap();
        let cp = compound_poisson_pmf(3.7, &unit, DEFAULT_TOL).unwrap();
        let p = poisson_pmf(3.7, DEFAULT_TOL).unwrap();
        assert!(cp.sup_distance(&p) < 1e-14);
    }

    #[test]
    fn compound_poisson_parity() {
        let two = RequirementDistribution::point(2).unwrap();
        let cp = compound_poisson_pmf(1.0, &two, DEFAULT_TOL).unwrap();
        assert!(cp.masses().iter().skip(1).step_by(2).all(|&m| m == 0.0));
        assert_abs_diff_eq!(cp.prob(2), (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn compound_poisson_matches_nfold_convolution() {
        let jumps = RequirementDistribution::new(vec![1, 3], vec![0.5, 0.5]).unwrap();
        let oracle = nfold_oracle(2.0, &[(1, 0.5), (3, 0.5)], 60);
        let cp = compound_poisson_pmf(2.0, &jumps, DEFAULT_TOL).unwrap();
        let len = cp.masses().len().max(oracle.len());
        let diff = (0..len)
            .map(|j| (cp.prob(j) - oracle.get(j).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-10, "L-inf {diff}");
    }

    #[test]
    fn compound_poisson_from_pmf_folds_zero_mass() {
        // Jumps {0: 0.5, 1: 0.5} at rate 2 thin to Poi(1).
        let jumps = Pmf::from_pairs(&[(0, 0.5), (1, 0.5)]).unwrap();
        let cp = compound_poisson_from_pmf(2.0, &jumps, DEFAULT_TOL, None).unwrap();
        let p = poisson_pmf(1.0, DEFAULT_TOL).unwrap();
        assert!(cp.sup_distance(&p) < 1e-14);
    }

    #[test]
    fn compound_poisson_cap_bounds_support() {
        let unit = RequirementDistribution::point(1).unwrap();
        let jumps = unit.to_pmf();
        let cp = compound_poisson_from_pmf(5.0, &jumps, DEFAULT_TOL, Some(4)).unwrap();
        assert_eq!(cp.j_max(), 4);
        assert!(cp.tail_mass() > 0.5);
    }

    #[test]
    fn mixture_basics() {
        let p = poisson_pmf(1.5, DEFAULT_TOL).unwrap();
        assert_eq!(mixture_pmf(std::slice::from_ref(&p), &[1.0]).unwrap(), p);
        let m = mixture_pmf(&[Pmf::point(2), Pmf::point(4)], &[0.5, 0.5]).unwrap();
        assert_eq!(m.masses(), &[0.0, 0.0, 0.5, 0.0, 0.5]);
        let q = poisson_pmf(4.0, DEFAULT_TOL).unwrap();
        let m = mixture_pmf(&[p.clone(), q.clone()], &[0.25, 0.75]).unwrap();
        assert_abs_diff_eq!(m.mean(), 0.25 * p.mean() + 0.75 * q.mean(), epsilon = 1e-12);
        assert!(matches!(
            mixture_pmf(&[p], &[0.5, 0.5]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn tail_prob_edges() {
        let p = poisson_pmf(2.0, 1e-6).unwrap();
        assert_eq!(tail_prob(&p, -0.5), 1.0);
        assert_eq!(tail_prob(&p, p.j_max() as f64), p.tail_mass());
        let jumps = RequirementDistribution::new(vec![2, 5], vec![0.3, 0.7]).unwrap();
        let cp = compound_poisson_pmf(1.3, &jumps, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(tail_prob(&cp, 0.0), 1.0 - (-1.3f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn requirement_validation() {
        assert!(RequirementDistribution::new(vec![1, 2], vec![0.5, 0.5]).is_ok());
        assert!(RequirementDistribution::new(vec![0, 2], vec![0.5, 0.5]).is_err());
        assert!(RequirementDistribution::new(vec![2, 2], vec![0.5, 0.5]).is_err());
        assert!(RequirementDistribution::new(vec![1, 2], vec![0.0, 1.0]).is_err());
        // Printed values of the first example law sum to 1.40.
        assert!(
            RequirementDistribution::new(vec![1, 2, 4, 8], vec![0.45, 0.35, 0.15, 0.5]).is_err()
        );
        assert!(Pmf::new(vec![0.5, 0.4], 0.0).is_err());
    }

    /// Direct oracle: `Σ_n e^{-r} r^n / n! · f^{*n}` for `n ≤ n_max`.
    fn nfold_oracle(rate: f64, atoms: &[(usize, f64)], n_max: usize) -> Vec<f64> {
        let max_b = atoms.iter().map(|a| a.0).max().unwrap();
        let len = n_max * max_b + 1;
        let mut power = vec![0.0; len];
        power[0] = 1.0;
        let mut out = vec![0.0; len];
        let mut weight = (-rate).exp();
        for n in 0..=n_max {
            if n > 0 {
                weight *= rate / n as f64;
                let mut next = vec![0.0; len];
                for (j, &p) in power.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    for &(b, a) in atoms {
                        if j + b < len {
                            next[j + b] += p * a;
                        }
                    }
                }
                power = next;
            }
            for (o, p) in out.iter_mut().zip(&power) {
                *o += weight * p;
            }
        }
        out
    }

    fn arb_pmf() -> impl Strategy<Value = Pmf> {
        prop::collection::vec(0.0f64..1.0, 1..12).prop_filter_map("zero mass", |raw| {
            let total: f64 = raw.iter().sum();
            (total > 1e-6).then(|| Pmf::new(raw.iter().map(|m| m / total).collect(), 0.0).unwrap())
        })
    }

    proptest! {
        #[test]
        fn convolution_commutes_and_associates(a in arb_pmf(), b in arb_pmf(), c in arb_pmf()) {
            prop_assert!(convolve(&a, &b).sup_distance(&convolve(&b, &a)) <= 1e-12);
            let left = convolve(&convolve(&a, &b), &c);
            let right = convolve(&a, &convolve(&b, &c));
            prop_assert!(left.sup_distance(&right) <= 1e-12);
        }

        #[test]
        fn tail_prob_non_increasing(a in arb_pmf(), x in -2.0f64..15.0, dx in 0.0f64..5.0) {
            prop_assert!(tail_prob(&a, x + dx) <= tail_prob(&a, x) + 1e-15);
        }

        #[test]
        fn constructors_normalized(rate in 0.0f64..30.0, b1 in 1u32..5, extra in 1u32..5, w in 0.05f64..0.95) {
            let jumps = RequirementDistribution::new(vec![b1, b1 + extra], vec![w, 1.0 - w]).unwrap();
            let cp = compound_poisson_pmf(rate, &jumps, DEFAULT_TOL).unwrap();
            let total = cp.stored_mass() + cp.tail_mass();
            prop_assert!((total - 1.0).abs() <= 1e-9);
            prop_assert!(cp.tail_mass() <= DEFAULT_TOL);
            let p = poisson_pmf(rate, DEFAULT_TOL).unwrap();
            prop_assert!((p.stored_mass() + p.tail_mass() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn panjer_matches_oracle(rate in 0.0f64..5.0, k in 1usize..=3, seed in any::<u64>()) {
            let mut sizes: Vec<usize> = (1..=8).collect();
            let mut s = seed;
            let mut atoms = Vec::new();
            for _ in 0..k {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let idx = (s >> 33) as usize % sizes.len();
                atoms.push(sizes.remove(idx));
            }
            atoms.sort_unstable();
            let weights: Vec<f64> = (0..k).map(|i| 1.0 + i as f64).collect();
            let total: f64 = weights.iter().sum();
            let pairs: Vec<(usize, f64)> = atoms.iter().zip(&weights).map(|(&b, &w)| (b, w / total)).collect();
            let jumps = RequirementDistribution::new(
                atoms.iter().map(|&b| b as u32).collect(),
                pairs.iter().map(|p| p.1).collect(),
            ).unwrap();
            let cp = compound_poisson_pmf(rate, &jumps, DEFAULT_TOL).unwrap();
            let oracle = nfold_oracle(rate, &pairs, 60);
            let diff = (0..cp.masses().len().max(oracle.len()))
                .map(|j| (cp.prob(j) - oracle.get(j).copied().unwrap_or(0.0)).abs())
                .fold(0.0, f64::max);
            prop_assert!(diff <= 1e-10, "L-inf {}", diff);
        }
    }
}
