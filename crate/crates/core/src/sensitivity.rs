//! Interference-robust confidence intervals for the direct effect.
//!
//! A reported no-interference standard error `se0` is inflated by an upper bound on
//! the second moment of the spillover-curvature term Q, and the resulting chi-squared
//! test is inverted numerically.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{check_probability, Error, Result};
use crate::quadrature::Rule;

/// Grid resolution used to confirm the rejection region is a complement of an interval.
const MONOTONE_GRID: usize = 4000;
const BISECTION_TOL: f64 = 1e-10;

/// Maps a hypothesised direct effect to an upper bound on E[Q²].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Q2Rule {
    /// No interference-driven inflation: the plain Wald test.
    Zero,
    /// A fixed bound independent of the hypothesised effect.
    Constant { value: f64 },
    /// `coefficient · τ₀²`.
    ScaledSquare { coefficient: f64 },
    /// Disjoint-communities bound with constant community profiles and spillover
    /// effects no larger than the direct effect, multiplied by `inflation`
    /// to absorb within-community heterogeneity. Equals `4 · inflation · τ₀²`.
    CommunityInflation { inflation: f64 },
}

impl Q2Rule {
    pub fn evaluate(&self, tau0: f64) -> f64 {
        match *self {
            Q2Rule::Zero => 0.0,
            Q2Rule::Constant { value } => value,
            Q2Rule::ScaledSquare { coefficient } => coefficient * tau0 * tau0,
            Q2Rule::CommunityInflation { inflation } => {
                let homogeneous = CommunityMoments::homogeneous(1.0, tau0.abs());
                inflation * disjoint_communities_bound(&homogeneous, std::slice::from_ref(&homogeneous))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (what, v) = match *self {
            Q2Rule::Zero => return Ok(()),
            Q2Rule::Constant { value } => ("q2 constant", value),
            Q2Rule::ScaledSquare { coefficient } => ("q2 coefficient", coefficient),
            Q2Rule::CommunityInflation { inflation } => ("q2 inflation", inflation),
        };
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(Error::Domain { what, value: v, expected: "finite and >= 0" })
        }
    }

    /// Returns `(constant, squared_coefficient)` with `q2(τ) = constant + squared_coefficient·τ²`.
    fn split(&self) -> (f64, f64) {
        match *self {
            Q2Rule::Zero => (0.0, 0.0),
            Q2Rule::Constant { value } => (value, 0.0),
            Q2Rule::ScaledSquare { coefficient } => (0.0, coefficient),
            Q2Rule::CommunityInflation { inflation } => (0.0, 4.0 * inflation),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityInput {
    pub n: usize,
    pub pi: f64,
    pub tau_hat: f64,
    pub se0: f64,
    #[serde(default)]
    pub sigma0_sq: f64,
    pub q2: Q2Rule,
}

impl SensitivityInput {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        check_probability("pi", self.pi)?;
        if !self.tau_hat.is_finite() {
            return Err(Error::Domain { what: "tau_hat", value: self.tau_hat, expected: "finite" });
        }
        if !(self.se0.is_finite() && self.se0 >= 0.0) {
            return Err(Error::Domain { what: "se0", value: self.se0, expected: "finite and >= 0" });
        }
        if !(self.sigma0_sq.is_finite() && self.sigma0_sq >= 0.0) {
            return Err(Error::Domain { what: "sigma0_sq", value: self.sigma0_sq, expected: "finite and >= 0" });
        }
        let total = self.se0 * self.se0 * self.n as f64;
        if self.sigma0_sq > total * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "sigma0_sq = {} exceeds n * se0^2 = {total}",
                self.sigma0_sq
            )));
        }
        self.q2.validate()
    }

    /// V₀ implied by `(σ₀² + π(1−π)V₀)/n = se0²`.
    pub fn v0(&self) -> f64 {
        let total = self.se0 * self.se0 * self.n as f64;
        ((total - self.sigma0_sq) / (self.pi * (1.0 - self.pi))).max(0.0)
    }

    /// Variance of √n(τ̂ − τ₀) allowed under H₀: τ = τ₀, divided by n.
    pub fn null_variance(&self, tau0: f64) -> f64 {
        let v = cs_bound(self.v0(), self.q2.evaluate(tau0));
        (self.sigma0_sq + self.pi * (1.0 - self.pi) * v) / self.n as f64
    }

    /// Coefficients of the null variance as a polynomial in |τ₀|.
    pub fn noise_polynomial(&self) -> NoisePolynomial {
        // No rule mixes a constant and a squared term.
        let (c, k) = self.q2.split();
        let v0 = self.v0();
        let scale = self.pi * (1.0 - self.pi) / self.n as f64;
        if k == 0.0 || c > 0.0 {
            return NoisePolynomial { constant: self.null_variance(0.0), linear: 0.0, quadratic: 0.0 };
        }
        NoisePolynomial {
            constant: self.sigma0_sq / self.n as f64 + scale * v0,
            linear: scale * 2.0 * (v0 * k).sqrt(),
            quadratic: scale * k,
        }
    }
}

/// `constant + linear·|τ₀| + quadratic·τ₀²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisePolynomial {
    pub constant: f64,
    pub linear: f64,
    pub quadratic: f64,
}

impl NoisePolynomial {
    pub fn eval(&self, tau0: f64) -> f64 {
        let t = tau0.abs();
        self.constant + self.linear * t + self.quadratic * t * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub alpha: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Cauchy-Schwarz bound `V₀ + 2√(V₀·q2) + q2` on the interference-inflated variance.
pub fn cs_bound(v0: f64, q2: f64) -> f64 {
    v0 + 2.0 * (v0 * q2).sqrt() + q2
}

/// Profile and effect moments of one community (or the global component).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunityMoments {
    /// P(U ∈ I_k); ignored for the global component.
    pub weight: f64,
    /// E[a_k(U) | U ∈ I_k].
    pub profile_mean: f64,
    /// E[a_k(U)² | U ∈ I_k].
    pub profile_second_moment: f64,
    /// E[f′(1) − f′(0) | U ∈ I_k].
    pub effect_mean: f64,
}

impl CommunityMoments {
    /// Constant profile, so the coefficient-of-variation ratio is one.
    pub fn homogeneous(weight: f64, effect_mean: f64) -> Self {
        CommunityMoments { weight, profile_mean: 1.0, profile_second_moment: 1.0, effect_mean }
    }

    fn ratio_term(&self) -> Result<f64> {
        if self.profile_mean == 0.0 || !self.profile_mean.is_finite() {
            return Err(Error::Precondition(format!(
                "degenerate community: profile mean {} must be nonzero",
                self.profile_mean
            )));
        }
        let cv = self.profile_second_moment / (self.profile_mean * self.profile_mean);
        Ok(cv * self.effect_mean * self.effect_mean)
    }
}

/// Upper bound on E[Q²] for a global rank-1 graphon plus disjoint community blocks.
pub fn disjoint_communities_q2(global: &CommunityMoments, communities: &[CommunityMoments]) -> Result<f64> {
    let mut total_weight = 0.0;
    for c in communities {
        if !(c.weight >= 0.0 && c.weight <= 1.0) {
            return Err(Error::Domain { what: "community weight", value: c.weight, expected: "0 <= w <= 1" });
        }
        total_weight += c.weight;
    }
    if total_weight > 1.0 + 1e-12 {
        return Err(Error::Domain { what: "sum of community weights", value: total_weight, expected: "<= 1" });
    }
    let mut half = global.ratio_term()?;
    for c in communities {
        half += c.weight * c.ratio_term()?;
    }
    Ok(2.0 * half)
}

fn disjoint_communities_bound(global: &CommunityMoments, communities: &[CommunityMoments]) -> f64 {
    disjoint_communities_q2(global, communities).expect("homogeneous moments are well formed")
}

/// E[Q²] for the star graphon with a homogeneous spillover-curvature effect.
pub fn star_q2(eta: f64, a: f64, effect: f64) -> Result<f64> {
    check_star(eta, a)?;
    let inner = eta * effect;
    let hub = inner + (1.0 - eta) * effect / eta;
    Ok(eta * hub * hub + (1.0 - eta) * inner * inner)
}

/// E[Q²] for the star graphon with a type-dependent effect `E[f′(1) − f′(0) | U = v]`.
pub fn star_q2_with(eta: f64, a: f64, effect: impl Fn(f64) -> f64) -> Result<f64> {
    check_star(eta, a)?;
    let rule = Rule::composite(&[eta], 32, 10);
    let core = rule.integrate(|v| if v <= eta { effect(v) } else { 0.0 });
    let periphery = rule.integrate(|v| if v > eta { effect(v) } else { 0.0 });
    let hub = core + periphery / eta;
    Ok(eta * hub * hub + (1.0 - eta) * core * core)
}

fn check_star(eta: f64, a: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain { what: "eta", value: eta, expected: "0 < eta <= 1" });
    }
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Domain { what: "a", value: a, expected: "0 < a <= 1" });
    }
    Ok(())
}

/// Φ⁻¹(1 − α/2).
pub fn two_sided_quantile(alpha: f64) -> Result<f64> {
    check_probability("alpha", alpha)?;
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

fn rejects(input: &SensitivityInput, z2: f64, tau0: f64) -> bool {
    let d = input.tau_hat - tau0;
    d * d >= z2 * input.null_variance(tau0)
}

pub fn test_reject(input: &SensitivityInput, tau0: f64, alpha: f64) -> Result<bool> {
    input.validate()?;
    let z = two_sided_quantile(alpha)?;
    Ok(rejects(input, z * z, tau0))
}

/// Set of τ₀ not rejected at level α, as a single interval.
pub fn invert_interval(input: &SensitivityInput, alpha: f64) -> Result<ConfidenceInterval> {
    input.validate()?;
    let z = two_sided_quantile(alpha)?;
    let z2 = z * z;
    let bound = 10.0 * (input.tau_hat.abs() + 10.0 * input.se0);
    let hi = endpoint(input, z2, bound, 1.0)?;
    let lo = endpoint(input, z2, bound, -1.0)?;
    Ok(ConfidenceInterval { alpha, lo, hi })
}

pub fn interval_curve(input: &SensitivityInput, alphas: &[f64]) -> Result<Vec<ConfidenceInterval>> {
    alphas.iter().map(|&a| invert_interval(input, a)).collect()
}

/// Sensitivity run description: the input plus the levels to invert at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityConfig {
    #[serde(flatten)]
    pub input: SensitivityInput,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
}

fn default_alphas() -> Vec<f64> {
    vec![0.05]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub input: SensitivityInput,
    pub v0: f64,
    pub noise_polynomial: NoisePolynomial,
    pub intervals: Vec<ConfidenceInterval>,
}

pub fn sensitivity_report(config: &SensitivityConfig) -> Result<SensitivityReport> {
    config.input.validate()?;
    if config.alphas.is_empty() {
        return Err(Error::Config("alpha list must not be empty".into()));
    }
    Ok(SensitivityReport {
        input: config.input.clone(),
        v0: config.input.v0(),
        noise_polynomial: config.input.noise_polynomial(),
        intervals: interval_curve(&config.input, &config.alphas)?,
    })
}

fn endpoint(input: &SensitivityInput, z2: f64, bound: f64, direction: f64) -> Result<f64> {
    let center = input.tau_hat;
    let at = |offset: f64| center + direction * offset;
    if rejects(input, z2, center) {
        // Zero null variance: the interval collapses to the point estimate.
        return Ok(center);
    }

    let span = bound + input.tau_hat.abs();
    let mut seen_reject = false;
    for k in 1..=MONOTONE_GRID {
        let offset = span * k as f64 / MONOTONE_GRID as f64;
        let r = rejects(input, z2, at(offset));
        if seen_reject && !r {
            return Err(Error::NonMonotone(format!(
                "acceptance resumes at tau0 = {} after rejection closer to tau_hat",
                at(offset)
            )));
        }
        seen_reject |= r;
    }

    let mut inner = 0.0;
    let mut outer = input.se0.max(1e-12);
    while !rejects(input, z2, at(outer)) {
        inner = outer;
        outer *= 2.0;
        if outer > span {
            if rejects(input, z2, at(span)) {
                outer = span;
                break;
            }
            return Err(Error::Feasibility(format!(
                "no rejection within |tau0| <= {bound}; interval is unbounded in practice"
            )));
        }
    }
    while outer - inner > BISECTION_TOL * (1.0 + outer) {
        let mid = 0.5 * (inner + outer);
        if rejects(input, z2, at(mid)) {
            outer = mid;
        } else {
            inner = mid;
        }
    }
    Ok(at(0.5 * (inner + outer)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn duflo(q2: Q2Rule) -> SensitivityInput {
        SensitivityInput { n: 473, pi: 0.5, tau_hat: 0.211, se0: 0.099, sigma0_sq: 0.0, q2 }
    }

    #[test]
    fn cs_bound_arithmetic() {
        assert_eq!(cs_bound(3.0, 0.0), 3.0);
        assert_eq!(cs_bound(0.0, 2.5), 2.5);
        assert_eq!(cs_bound(4.0, 1.0), 9.0);
    }

    #[test]
    fn single_homogeneous_community_gives_four_effect_squared() {
        let e = 0.7;
        let m = CommunityMoments::homogeneous(1.0, e);
        let q = disjoint_communities_q2(&m, &[m]).unwrap();
        assert!((q - 4.0 * e * e).abs() < 1e-14);
        let zero = CommunityMoments::homogeneous(1.0, 0.0);
        assert_eq!(disjoint_communities_q2(&zero, &[zero]).unwrap(), 0.0);
    }

    #[test]
    fn working_assumptions_give_eight_tau_squared() {
        let rule = Q2Rule::CommunityInflation { inflation: 2.0 };
        for tau in [-0.3, 0.0, 0.211, 1.5] {
            assert!((rule.evaluate(tau) - 8.0 * tau * tau).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_community_is_rejected() {
        let bad = CommunityMoments { weight: 0.5, profile_mean: 0.0, profile_second_moment: 0.0, effect_mean: 1.0 };
        let good = CommunityMoments::homogeneous(1.0, 1.0);
        assert!(disjoint_communities_q2(&good, &[bad]).is_err());
        let heavy = CommunityMoments::homogeneous(0.8, 1.0);
        assert!(disjoint_communities_q2(&good, &[heavy, heavy]).is_err());
    }

    #[test]
    fn star_limit_and_quadrature_agree() {
        let d = 0.5;
        assert_eq!(star_q2(0.1, 0.3, 0.0).unwrap(), 0.0);
        let full = star_q2_with(1.0, 0.3, |_| d).unwrap();
        assert!((full - d * d).abs() < 1e-12);
        for eta in [0.1, 0.01, 0.001] {
            let closed = star_q2(eta, 0.3, d).unwrap();
            let quad = star_q2_with(eta, 0.3, |_| d).unwrap();
            assert!((closed - quad).abs() < 1e-9 * closed);
        }
        let scaled = 0.001 * star_q2(0.001, 0.3, d).unwrap();
        assert!((scaled - d * d).abs() < 0.05 * d * d);
    }

    #[test]
    fn duflo_noise_polynomial() {
        let p = duflo(Q2Rule::ScaledSquare { coefficient: 8.0 }).noise_polynomial();
        assert!((p.constant - 0.0098).abs() < 5e-4, "{p:?}");
        assert!((p.linear - 0.0129).abs() < 5e-4, "{p:?}");
        assert!((p.quadratic - 0.0042).abs() < 5e-4, "{p:?}");
        let input = duflo(Q2Rule::ScaledSquare { coefficient: 8.0 });
        for t in [-1.0, 0.0, 0.3, 2.0] {
            assert!((p.eval(t) - input.null_variance(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn duflo_intervals() {
        let robust = invert_interval(&duflo(Q2Rule::CommunityInflation { inflation: 2.0 }), 0.05).unwrap();
        assert!((robust.lo - 0.015).abs() < 0.002, "{robust:?}");
        assert!((robust.hi - 0.464).abs() < 0.002, "{robust:?}");
        let plain = invert_interval(&duflo(Q2Rule::Zero), 0.05).unwrap();
        assert!((plain.lo - 0.017).abs() < 0.001, "{plain:?}");
        assert!((plain.hi - 0.405).abs() < 0.001, "{plain:?}");
    }

    #[test]
    fn zero_rule_is_wald() {
        let input = duflo(Q2Rule::Zero);
        for alpha in [0.01, 0.05, 0.2] {
            let ci = invert_interval(&input, alpha).unwrap();
            let z = two_sided_quantile(alpha).unwrap();
            assert!((ci.lo - (0.211 - z * 0.099)).abs() < 1e-6);
            assert!((ci.hi - (0.211 + z * 0.099)).abs() < 1e-6);
        }
        assert!(!test_reject(&input, 0.211, 0.5).unwrap());
    }

    #[test]
    fn unbounded_acceptance_is_loud() {
        let input = duflo(Q2Rule::ScaledSquare { coefficient: 1e5 });
        assert!(matches!(invert_interval(&input, 0.05), Err(Error::Feasibility(_))));
    }

    #[test]
    fn invalid_inputs() {
        let mut input = duflo(Q2Rule::Zero);
        input.sigma0_sq = 10.0;
        assert!(input.validate().is_err());
        assert!(test_reject(&duflo(Q2Rule::Zero), 0.0, 1.0).is_err());
    }

    #[test]
    fn config_parses_flat() {
        let c: SensitivityConfig = serde_json::from_str(
            r#"{"n":473,"pi":0.5,"tau_hat":0.211,"se0":0.099,"q2":{"rule":"zero"},"alphas":[0.05,0.1]}"#,
        )
        .unwrap();
        let r = sensitivity_report(&c).unwrap();
        assert_eq!(r.intervals.len(), 2);
        assert!(r.intervals[1].hi < r.intervals[0].hi);
    }

    #[test]
    fn q2_rule_serde() {
        let r: Q2Rule = serde_json::from_str(r#"{"rule":"community_inflation","inflation":2.0}"#).unwrap();
        assert_eq!(r, Q2Rule::CommunityInflation { inflation: 2.0 });
    }
}
