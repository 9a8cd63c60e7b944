//! Asymptotic variance predictions for the direct and indirect effect estimators.
//!
//! Outer expectations over a unit's latent type are Monte Carlo averages over
//! antithetic pairs `(U, 1 - U)`, with standard errors computed from the pair
//! means. Inner integrals over the other unit's type use composite
//! Gauss-Legendre quadrature aligned to the graphon's breakpoints. Outcome
//! noise enters analytically.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::graphon::GraphonSpec;
use crate::outcomes::OutcomeModel;
use crate::quadrature::Rule;
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TheoryConfig {
    /// Number of outer draws (rounded up to an even count).
    pub outer: usize,
    pub seed: u64,
    /// Quadrature panels per breakpoint segment for inner integrals.
    pub panels: usize,
    /// Gauss-Legendre order per panel.
    pub order: usize,
    /// Use closed forms for constant and rank-1 graphons.
    pub closed_forms: bool,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            outer: 10_000,
            seed: 0x7468_656f_7279,
            panels: 16,
            order: 8,
            closed_forms: true,
        }
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectEstimator {
    Ht,
    Hajek,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Around the sample estimand.
    Sample,
    /// Around the population estimand.
    Population,
}

/// Asymptotic variances of `sqrt(n) (estimate - target)` for the direct-effect estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectCltPrediction {
    pub pi: f64,
    pub e_r: Moment,
    pub e_r2: Moment,
    pub var_r: Moment,
    pub e_q: Moment,
    pub e_q2: Moment,
    pub e_rq2: Moment,
    pub var_rq: Moment,
    pub sigma0_sq: Moment,
    /// `pi (1 - pi) E[(R + Q)^2]`.
    pub ht: Moment,
    /// `pi (1 - pi) (Var[R + Q] + E[Q]^2)`.
    pub hajek: Moment,
    /// `pi (1 - pi) E[R^2]`, ignoring interference.
    pub naive_ht: Moment,
    /// `pi (1 - pi) Var[R]`, ignoring interference.
    pub naive_hajek: Moment,
}

impl DirectCltPrediction {
    pub fn variance(&self, estimator: DirectEstimator, centering: Centering) -> f64 {
        let base = match estimator {
            DirectEstimator::Ht => self.ht.value,
            DirectEstimator::Hajek => self.hajek.value,
        };
        base + self.centering_shift(centering)
    }

    pub fn naive_variance(&self, estimator: DirectEstimator, centering: Centering) -> f64 {
        let base = match estimator {
            DirectEstimator::Ht => self.naive_ht.value,
            DirectEstimator::Hajek => self.naive_hajek.value,
        };
        base + self.centering_shift(centering)
    }

    fn centering_shift(&self, centering: Centering) -> f64 {
        match centering {
            Centering::Sample => 0.0,
            Centering::Population => self.sigma0_sq.value,
        }
    }

    /// Limit of the plug-in variance estimator, `pi (1 - pi) V0 + sigma0^2` with `V0 = Var[R]`.
    pub fn plug_in_limit(&self) -> f64 {
        self.naive_hajek.value + self.sigma0_sq.value
    }
}

/// Variance constant of the PC balancing estimator: `(estimate - target) / sqrt(rho)` has variance `sigma2_ind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndirectCltPrediction {
    pub rank: usize,
    pub sigma2_ind: Moment,
    /// `E[G(U1, U2) (alpha_1^2 + alpha_1 alpha_2)]`.
    pub alpha_term: Moment,
    /// `E[g(U) eta^2]`, including outcome noise.
    pub eta_term: Moment,
    /// Projections `E[b psi_k]`.
    pub mu: Vec<f64>,
}

/// Variance scale of the unbiased indirect estimator: its variance is about `n rho^2 nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnbiasedVarianceScale {
    /// `E[h(U)^2] / (pi (1 - pi))` with `h(u) = int G(u, v) b(v) dv`.
    pub nu: Moment,
    /// `E[b(U) g(U)]^2`.
    pub squared_mean: Moment,
}

/// Inner quadrature over the second unit's type, with the degree function tabulated.
struct Inner<'a> {
    spec: &'a GraphonSpec,
    rule: Rule,
    degree: Vec<f64>,
}

impl<'a> Inner<'a> {
    fn new(spec: &'a GraphonSpec, cfg: &TheoryConfig) -> Result<Self> {
        spec.validate()?;
        let rule = Rule::composite(&spec.breaks(), cfg.panels.max(1), cfg.order.max(1));
        let mut inner = Self {
            spec,
            rule,
            degree: Vec::new(),
        };
        inner.degree = inner.rule.nodes.iter().map(|&v| inner.row(v, |_| 1.0)).collect();
        let grid_min = (0..=200)
            .map(|k| inner.row((k as f64 + 0.5) / 201.0, |_| 1.0))
            .chain(inner.degree.iter().copied())
            .fold(f64::INFINITY, f64::min);
        if grid_min.is_nan() || grid_min <= 1e-10 {
            return Err(Error::Precondition(format!(
                "expected degree function vanishes (min {grid_min:e}); some units are isolated in the limit"
            )));
        }
        Ok(inner)
    }

    /// `int G(u, v) h(v) dv` with `h` indexed by quadrature node.
    fn row(&self, u: f64, h: impl Fn(usize) -> f64) -> f64 {
        self.rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .enumerate()
            .map(|(j, (&v, &w))| w * self.spec.eval(u, v) * h(j))
            .sum()
    }
}

fn outer_points(cfg: &TheoryConfig) -> Result<Vec<f64>> {
    if cfg.outer < 2 {
        return Err(Error::Config("theory needs at least 2 outer draws".into()));
    }
    let pairs = cfg.outer.div_ceil(2);
    let mut rng = rng_from(cfg.seed);
    Ok((0..pairs)
        .flat_map(|_| {
            let u: f64 = rng.random();
            [u, 1.0 - u]
        })
        .collect())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean of `xs`, treating consecutive antithetic pairs as one draw.
fn pair_se(xs: &[f64]) -> f64 {
    let pairs: Vec<f64> = xs.chunks(2).map(mean).collect();
    let m = pairs.len() as f64;
    if m < 2.0 {
        return 0.0;
    }
    let mu = mean(&pairs);
    let var = pairs.iter().map(|p| (p - mu).powi(2)).sum::<f64>() / (m - 1.0);
    (var / m).sqrt()
}

fn moment(xs: &[f64]) -> Moment {
    Moment {
        value: mean(xs),
        se: pair_se(xs),
    }
}

/// Variance `E[(X - EX)^2]`; the standard error comes from its influence function.
fn variance_moment(xs: &[f64]) -> Moment {
    let mu = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - mu).powi(2)).collect();
    moment(&sq)
}

/// Evaluation strategy for `Q(u) = int G(u, v) d(v) / g(v) dv`, `d = df/dx(1, pi) - df/dx(0, pi)`.
enum QForm {
    Constant(f64),
    /// `a(u) * scale`.
    Rank1 { scale: f64 },
    General { d_over_g: Vec<f64> },
}

fn q_form(spec: &GraphonSpec, model: &OutcomeModel, pi: f64, inner: &Inner, cfg: &TheoryConfig) -> QForm {
    let slope = |u: f64| model.partial_x_unchecked(true, pi, u) - model.partial_x_unchecked(false, pi, u);
    if cfg.closed_forms {
        let types = Rule::composite(&spec.breaks(), 32, 12);
        match spec {
            GraphonSpec::Constant { .. } => return QForm::Constant(types.integrate(slope)),
            GraphonSpec::Rank1Product { profile } => {
                let mean_profile = types.integrate(|u| profile.eval(u));
                return QForm::Rank1 {
                    scale: types.integrate(slope) / mean_profile,
                };
            }
            _ => {}
        }
    }
    QForm::General {
        d_over_g: inner
            .rule
            .nodes
            .iter()
            .zip(&inner.degree)
            .map(|(&v, &g)| slope(v) / g)
            .collect(),
    }
}

fn q_at(form: &QForm, spec: &GraphonSpec, inner: &Inner, u: f64) -> f64 {
    match form {
        QForm::Constant(c) => *c,
        QForm::Rank1 { scale } => match spec {
            GraphonSpec::Rank1Product { profile } => profile.eval(u) * scale,
            _ => unreachable!("rank-1 closed form on a non rank-1 graphon"),
        },
        QForm::General { d_over_g } => inner.row(u, |j| d_over_g[j]),
    }
}

/// Direct-effect CLT variances and their ingredients.
pub fn direct_clt(spec: &GraphonSpec, model: &OutcomeModel, pi: f64, cfg: &TheoryConfig) -> Result<DirectCltPrediction> {
    check_probability("pi", pi)?;
    let inner = Inner::new(spec, cfg)?;
    let form = q_form(spec, model, pi, &inner, cfg);
    let us = outer_points(cfg)?;
    let pq = pi * (1.0 - pi);
    let noise_r = model.noise_sd().powi(2) * (1.0 / pi + 1.0 / (1.0 - pi)).powi(2);

    let mut r = Vec::with_capacity(us.len());
    let mut q = Vec::with_capacity(us.len());
    let mut alpha = Vec::with_capacity(us.len());
    for &u in &us {
        let f1 = model.mean_unchecked(true, pi, u);
        let f0 = model.mean_unchecked(false, pi, u);
        r.push(f1 / pi + f0 / (1.0 - pi));
        q.push(q_at(&form, spec, &inner, u));
        alpha.push(f1 - f0);
    }
    let rq: Vec<f64> = r.iter().zip(&q).map(|(a, b)| a + b).collect();
    let square = |xs: &[f64]| xs.iter().map(|x| x * x).collect::<Vec<f64>>();
    let with_noise = |m: Moment| Moment {
        value: m.value + noise_r,
        se: m.se,
    };
    let scaled = |m: Moment| Moment {
        value: pq * m.value,
        se: pq * m.se,
    };

    let e_r = moment(&r);
    let e_r2 = with_noise(moment(&square(&r)));
    let var_r = with_noise(variance_moment(&r));
    let e_q = moment(&q);
    let e_q2 = moment(&square(&q));
    let e_rq2 = with_noise(moment(&square(&rq)));
    let var_rq = with_noise(variance_moment(&rq));
    let sigma0_sq = variance_moment(&alpha);

    // Hajek: Var[R + Q] + E[Q]^2, standard error through the joint influence function
    let mu_rq = mean(&rq);
    let influence: Vec<f64> = rq
        .iter()
        .zip(&q)
        .map(|(x, qi)| (x - mu_rq).powi(2) + 2.0 * e_q.value * qi)
        .collect();
    let hajek = Moment {
        value: pq * (var_rq.value + e_q.value.powi(2)),
        se: pq * pair_se(&influence),
    };

    Ok(DirectCltPrediction {
        pi,
        e_r,
        e_r2,
        var_r,
        e_q,
        e_q2,
        e_rq2,
        var_rq,
        sigma0_sq,
        ht: scaled(e_rq2),
        hajek,
        naive_ht: scaled(e_r2),
        naive_hajek: scaled(var_r),
    })
}

/// Naive (interference-ignoring) variances `(HT, Hajek)`; these do not depend on the graph.
pub fn naive_variance(model: &OutcomeModel, pi: f64, cfg: &TheoryConfig) -> Result<(Moment, Moment)> {
    let p = direct_clt(&GraphonSpec::Constant { value: 1.0 }, model, pi, cfg)?;
    Ok((p.naive_ht, p.naive_hajek))
}

/// Variance constant of the PC balancing estimator using the graphon's top-`rank` eigenfunctions.
pub fn indirect_clt(
    spec: &GraphonSpec,
    model: &OutcomeModel,
    pi: f64,
    rank: usize,
    cfg: &TheoryConfig,
) -> Result<IndirectCltPrediction> {
    check_probability("pi", pi)?;
    let eig = spec.true_eigensystem()?;
    if rank == 0 || rank > eig.rank() {
        return Err(Error::Unsupported(format!(
            "rank {rank} requested from a graphon with {} known eigenpairs",
            eig.rank()
        )));
    }
    let pairs = &eig.pairs[..rank];
    let inner = Inner::new(spec, cfg)?;
    let b = |u: f64| pi * model.mean_unchecked(true, pi, u) + (1.0 - pi) * model.mean_unchecked(false, pi, u);
    let alpha = |u: f64| model.mean_unchecked(true, pi, u) - model.mean_unchecked(false, pi, u);
    let types = Rule::composite(&spec.breaks(), 32, 12);
    let mu: Vec<f64> = pairs.iter().map(|p| types.integrate(|u| b(u) * p.psi.eval(u))).collect();
    let alpha_nodes: Vec<f64> = inner.rule.nodes.iter().map(|&v| alpha(v)).collect();
    let noise = model.noise_sd().powi(2);

    let us = outer_points(cfg)?;
    let mut alpha_vals = Vec::with_capacity(us.len());
    let mut eta_vals = Vec::with_capacity(us.len());
    for &u in &us {
        let g = inner.row(u, |_| 1.0);
        let a = alpha(u);
        let cross = inner.row(u, |j| alpha_nodes[j]);
        alpha_vals.push(a * a * g + a * cross);
        let eta = b(u) - pairs.iter().zip(&mu).map(|(p, m)| m * p.psi.eval(u)).sum::<f64>();
        eta_vals.push(g * (eta * eta + noise));
    }
    let alpha_term = moment(&alpha_vals);
    let eta_term = moment(&eta_vals);
    let pq = pi * (1.0 - pi);
    let combined: Vec<f64> = alpha_vals.iter().zip(&eta_vals).map(|(a, e)| a + e / pq).collect();
    Ok(IndirectCltPrediction {
        rank,
        sigma2_ind: moment(&combined),
        alpha_term,
        eta_term,
        mu,
    })
}

/// Variance scale `nu` of the unbiased indirect estimator.
pub fn unbiased_variance_scale(
    spec: &GraphonSpec,
    model: &OutcomeModel,
    pi: f64,
    cfg: &TheoryConfig,
) -> Result<UnbiasedVarianceScale> {
    check_probability("pi", pi)?;
    let inner = Inner::new(spec, cfg)?;
    let b = |u: f64| pi * model.mean_unchecked(true, pi, u) + (1.0 - pi) * model.mean_unchecked(false, pi, u);
    let b_nodes: Vec<f64> = inner.rule.nodes.iter().map(|&v| b(v)).collect();
    let us = outer_points(cfg)?;
    let mut h2 = Vec::with_capacity(us.len());
    let mut bg = Vec::with_capacity(us.len());
    for &u in &us {
        let h = inner.row(u, |j| b_nodes[j]);
        h2.push(h * h);
        bg.push(b(u) * inner.row(u, |_| 1.0));
    }
    let pq = pi * (1.0 - pi);
    let h2 = moment(&h2);
    let bg = moment(&bg);
    Ok(UnbiasedVarianceScale {
        nu: Moment {
            value: h2.value / pq,
            se: h2.se / pq,
        },
        squared_mean: Moment {
            value: bg.value.powi(2),
            se: 2.0 * bg.value.abs() * bg.se,
        },
    })
}

/// `E[Q^2]` computed by quadrature in both arguments; used to cross-check closed forms.
pub fn q_second_moment_quadrature(spec: &GraphonSpec, model: &OutcomeModel, pi: f64, cfg: &TheoryConfig) -> Result<f64> {
    check_probability("pi", pi)?;
    let inner = Inner::new(spec, cfg)?;
    let general = TheoryConfig {
        closed_forms: false,
        ..*cfg
    };
    let form = q_form(spec, model, pi, &inner, &general);
    let outer = Rule::composite(&spec.breaks(), cfg.panels.max(1), cfg.order.max(1));
    Ok(outer.integrate(|u| q_at(&form, spec, &inner, u).powi(2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::Profile;
    use crate::outcomes::OutcomeForm;
    use crate::presets;

    fn figure2() -> (GraphonSpec, OutcomeModel) {
        let p = presets::lookup("figure2_constant").unwrap();
        (p.graphon, p.outcome)
    }

    #[test]
    fn figure2_closed_form_values() {
        let (g, m) = figure2();
        let p = direct_clt(&g, &m, 0.7, &TheoryConfig::default()).unwrap();
        let pi: f64 = 0.7;
        let q = 1.0 / (pi * pi);
        assert!((p.e_q.value - q).abs() < 1e-12);
        assert!(p.e_q.se < 1e-12);
        let noise = (1.0 / 0.21f64).powi(2);
        assert!((p.e_r2.value - (q * q + noise)).abs() < 1e-9);
        assert!((p.e_rq2.value - (4.0 * q * q + noise)).abs() < 1e-9);
        assert!((p.ht.value - 0.21 * (4.0 * q * q + noise)).abs() < 1e-9);
        assert!((p.hajek.value - 0.21 * (noise + q * q)).abs() < 1e-9);
        assert!(p.sigma0_sq.value.abs() < 1e-12);
        assert!(p.naive_ht.value < p.ht.value);
        assert!((p.plug_in_limit() - 0.21 * noise).abs() < 1e-9);
    }

    #[test]
    fn closed_form_and_quadrature_agree() {
        let generic = TheoryConfig {
            closed_forms: false,
            ..Default::default()
        };
        for name in ["figure2_constant", "appendix_a_6", "appendix_a_7", "appendix_a_9"] {
            let p = presets::lookup(name).unwrap();
            let a = direct_clt(&p.graphon, &p.outcome, 0.5, &TheoryConfig::default()).unwrap();
            let b = direct_clt(&p.graphon, &p.outcome, 0.5, &generic).unwrap();
            for (x, y) in [(a.e_q, b.e_q), (a.e_q2, b.e_q2), (a.ht, b.ht), (a.hajek, b.hajek)] {
                assert!((x.value - y.value).abs() <= 4.0 * (x.se + y.se) + 1e-8, "{name}: {x:?} vs {y:?}");
            }
        }
    }

    #[test]
    fn additive_model_has_no_q() {
        let g = presets::lookup("appendix_a_1").unwrap().graphon;
        let m = OutcomeModel::from_form(OutcomeForm::Linear { direct: 1.0, spillover: 2.0 }, 0.3).unwrap();
        let p = direct_clt(&g, &m, 0.4, &TheoryConfig::default()).unwrap();
        assert!(p.e_q2.value < 1e-20);
        assert!((p.ht.value - p.naive_ht.value).abs() < 1e-12);
    }

    #[test]
    fn zero_model() {
        let g = presets::lookup("appendix_a_2").unwrap().graphon;
        let m = OutcomeModel::from_form(OutcomeForm::Linear { direct: 0.0, spillover: 0.0 }, 0.0).unwrap();
        let p = direct_clt(&g, &m, 0.5, &TheoryConfig::default()).unwrap();
        for v in [p.ht, p.hajek, p.naive_ht, p.naive_hajek, p.sigma0_sq, p.e_q2] {
            assert_eq!(v.value, 0.0);
        }
        let nu = unbiased_variance_scale(&g, &m, 0.5, &TheoryConfig::default()).unwrap();
        assert_eq!(nu.nu.value, 0.0);
        let (a, b) = naive_variance(&m, 0.5, &TheoryConfig::default()).unwrap();
        assert_eq!((a.value, b.value), (0.0, 0.0));
    }

    #[test]
    fn isolated_limit_is_rejected() {
        let star = GraphonSpec::Star { eta: 0.2, a: 0.0 };
        let m = OutcomeModel::from_form(OutcomeForm::Cos3, 0.0).unwrap();
        assert!(matches!(
            direct_clt(&star, &m, 0.5, &TheoryConfig::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn figure2_unbiased_scale() {
        let (g, m) = figure2();
        let s = unbiased_variance_scale(&g, &m, 0.7, &TheoryConfig::default()).unwrap();
        assert!((s.squared_mean.value - 0.16).abs() < 1e-12);
        assert!((s.nu.value - 0.16 / 0.21).abs() < 1e-12);
    }

    #[test]
    fn indirect_special_cases() {
        // b in the span of the constant eigenfunction: eta vanishes apart from noise
        let g = GraphonSpec::Constant { value: 0.5 };
        let m = OutcomeModel::from_form(OutcomeForm::Linear { direct: 1.0, spillover: 0.0 }, 0.0).unwrap();
        let p = indirect_clt(&g, &m, 0.5, 1, &TheoryConfig::default()).unwrap();
        assert!(p.eta_term.value.abs() < 1e-20);
        // alpha identically zero: only the eta term remains
        let m = OutcomeModel::from_form(OutcomeForm::Expression {
            expr: "u^2 + x".into(),
            params: Default::default(),
            derivative: Default::default(),
        }, 0.1)
        .unwrap();
        let sbm = presets::lookup("appendix_a_1").unwrap().graphon;
        let p = indirect_clt(&sbm, &m, 0.5, 3, &TheoryConfig::default()).unwrap();
        assert!(p.alpha_term.value.abs() < 1e-20);
        assert!((p.sigma2_ind.value - p.eta_term.value / 0.25).abs() < 1e-12);
        assert!(indirect_clt(&sbm, &m, 0.5, 4, &TheoryConfig::default()).is_err());
    }

    #[test]
    fn indirect_setting_one_has_small_se() {
        let p = presets::lookup("appendix_a_1").unwrap();
        let pred = indirect_clt(&p.graphon, &p.outcome, 0.5, 3, &TheoryConfig::default()).unwrap();
        assert!(pred.sigma2_ind.value > 0.0);
        assert!(pred.sigma2_ind.se < 0.01 * pred.sigma2_ind.value, "{pred:?}");
    }

    #[test]
    fn rank1_q_matches_quadrature() {
        let profile = Profile::Quartic { scale: 0.05, offset: 0.1 };
        let g = GraphonSpec::Rank1Product { profile: profile.clone() };
        let m = OutcomeModel::from_form(OutcomeForm::PolyExp, 0.2).unwrap();
        let cfg = TheoryConfig::default();
        let p = direct_clt(&g, &m, 0.5, &cfg).unwrap();
        let quad = q_second_moment_quadrature(&g, &m, 0.5, &cfg).unwrap();
        assert!((p.e_q2.value - quad).abs() < 4.0 * p.e_q2.se + 1e-9);
    }

    #[test]
    fn hajek_ht_ordering_follows_components() {
        for name in presets::names() {
            let p = presets::lookup(name).unwrap();
            let d = direct_clt(&p.graphon, &p.outcome, p.pi, &TheoryConfig::default()).unwrap();
            let hajek_smaller = d.hajek.value <= d.ht.value;
            let mean_rq = d.e_r.value + d.e_q.value;
            assert_eq!(hajek_smaller, d.e_q.value.powi(2) <= mean_rq.powi(2), "{name}");
        }
    }
}
