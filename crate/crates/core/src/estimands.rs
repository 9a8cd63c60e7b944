//! Ground-truth targets: exact sample estimands on small graphs and population limits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::experiment::{fraction, ExperimentRealization};
use crate::network::SampledNetwork;
use crate::outcomes::OutcomeModel;
use crate::quadrature::Rule;
use crate::rng::rng_from;

/// Largest network handled by full enumeration of assignments.
pub const EXHAUSTIVE_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimandFlavor {
    SampleExhaustive,
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimandSet {
    pub tau_dir: f64,
    pub tau_ind: f64,
    pub tau_tot: f64,
    pub flavor: EstimandFlavor,
}

/// Per-treated-count sums over all `2^n` assignments; independent of `pi`.
#[derive(Debug, Clone)]
pub struct ExhaustiveTable {
    n: usize,
    /// `sum_{|W| = t} mean_i f_i(W)`.
    mean_outcome: Vec<f64>,
    direct: Vec<f64>,
    indirect: Vec<f64>,
}

fn check_exhaustive_size(n: usize) -> Result<()> {
    if n > EXHAUSTIVE_MAX_N {
        return Err(Error::Feasibility(format!(
            "exhaustive enumeration over {n} units (limit {EXHAUSTIVE_MAX_N})"
        )));
    }
    Ok(())
}

/// Visit every assignment in Gray-code order with incrementally maintained treated-neighbour counts.
fn for_each_assignment(net: &SampledNetwork, mut visit: impl FnMut(&[bool], &[u32], usize)) {
    let n = net.n();
    let mut w = vec![false; n];
    let mut m = vec![0u32; n];
    let mut treated = 0usize;
    visit(&w, &m, treated);
    for k in 1u64..(1u64 << n) {
        let b = k.trailing_zeros() as usize;
        w[b] = !w[b];
        if w[b] {
            treated += 1;
            for &j in net.neighbors(b) {
                m[j as usize] += 1;
            }
        } else {
            treated -= 1;
            for &j in net.neighbors(b) {
                m[j as usize] -= 1;
            }
        }
        visit(&w, &m, treated);
    }
}

#[inline]
fn bernoulli_weight(pi: f64, n: usize, t: usize) -> f64 {
    pi.powi(t as i32) * (1.0 - pi).powi((n - t) as i32)
}

impl ExhaustiveTable {
    /// Enumerate all assignments on `net` using the noise-free part of `model`.
    pub fn build(net: &SampledNetwork, model: &OutcomeModel) -> Result<Self> {
        let n = net.n();
        check_exhaustive_size(n)?;
        let types = net.types();
        let deg = net.degrees();
        let mut mean_outcome = vec![0.0; n + 1];
        let mut direct = vec![0.0; n + 1];
        let mut indirect = vec![0.0; n + 1];
        let f = |t: bool, x: f64, u: f64| model.mean_unchecked(t, x, u);
        for_each_assignment(net, |w, m, t| {
            let mut ybar = 0.0;
            let mut dir = 0.0;
            let mut ind = 0.0;
            for i in 0..n {
                let x = fraction(m[i], deg[i]);
                ybar += f(w[i], x, types[i]);
                dir += f(true, x, types[i]) - f(false, x, types[i]);
                // effect of switching unit i on each neighbour j
                let own = u32::from(w[i]);
                for &j in net.neighbors(i) {
                    let j = j as usize;
                    let rest = m[j] - own;
                    ind += f(w[j], fraction(rest + 1, deg[j]), types[j]) - f(w[j], fraction(rest, deg[j]), types[j]);
                }
            }
            mean_outcome[t] += ybar / n as f64;
            direct[t] += dir / n as f64;
            indirect[t] += ind / n as f64;
        });
        Ok(Self {
            n,
            mean_outcome,
            direct,
            indirect,
        })
    }

    fn weighted(&self, sums: &[f64], pi: f64) -> f64 {
        sums.iter()
            .enumerate()
            .map(|(t, s)| s * bernoulli_weight(pi, self.n, t))
            .sum()
    }

    /// Expected mean outcome when every unit is treated with probability `pi`.
    pub fn mean_outcome(&self, pi: f64) -> f64 {
        self.weighted(&self.mean_outcome, pi)
    }

    /// Derivative of [`Self::mean_outcome`] in `pi`.
    pub fn mean_outcome_slope(&self, pi: f64) -> f64 {
        let n = self.n;
        self.mean_outcome
            .iter()
            .enumerate()
            .map(|(t, s)| {
                let up = if t > 0 {
                    t as f64 * pi.powi(t as i32 - 1) * (1.0 - pi).powi((n - t) as i32)
                } else {
                    0.0
                };
                let down = if t < n {
                    (n - t) as f64 * pi.powi(t as i32) * (1.0 - pi).powi((n - t) as i32 - 1)
                } else {
                    0.0
                };
                s * (up - down)
            })
            .sum()
    }

    pub fn estimands(&self, pi: f64) -> Result<EstimandSet> {
        check_probability("pi", pi)?;
        Ok(EstimandSet {
            tau_dir: self.weighted(&self.direct, pi),
            tau_ind: self.weighted(&self.indirect, pi),
            tau_tot: self.mean_outcome_slope(pi),
            flavor: EstimandFlavor::SampleExhaustive,
        })
    }
}

/// Exact direct, indirect and total effects by enumeration of all assignments.
pub fn exhaustive_estimands(net: &SampledNetwork, model: &OutcomeModel, pi: f64) -> Result<EstimandSet> {
    check_probability("pi", pi)?;
    ExhaustiveTable::build(net, model)?.estimands(pi)
}

/// Exact expectation of `stat` over the Bernoulli(`pi`) design, with noise-free outcomes.
pub fn exhaustive_expectation(
    net: &SampledNetwork,
    model: &OutcomeModel,
    pi: f64,
    mut stat: impl FnMut(&ExperimentRealization) -> Result<f64>,
) -> Result<f64> {
    check_probability("pi", pi)?;
    let n = net.n();
    check_exhaustive_size(n)?;
    let types = net.types();
    let degrees = net.degrees();
    let mut by_count = vec![0.0; n + 1];
    let mut failure = None;
    for_each_assignment(net, |w, m, t| {
        if failure.is_some() {
            return;
        }
        let fractions: Vec<f64> = (0..n).map(|i| fraction(m[i], degrees[i])).collect();
        let outcomes = (0..n)
            .map(|i| model.mean_unchecked(w[i], fractions[i], types[i]))
            .collect();
        let r = ExperimentRealization {
            treatment: w.to_vec(),
            treated_neighbors: m.to_vec(),
            degrees: degrees.clone(),
            fractions,
            outcomes,
        };
        match stat(&r) {
            Ok(v) => by_count[t] += v,
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(by_count
        .iter()
        .enumerate()
        .map(|(t, s)| s * bernoulli_weight(pi, n, t))
        .sum())
}

fn population_terms(model: &OutcomeModel, pi: f64, u: f64) -> (f64, f64) {
    let dir = model.mean_unchecked(true, pi, u) - model.mean_unchecked(false, pi, u);
    let ind = pi * model.partial_x_unchecked(true, pi, u) + (1.0 - pi) * model.partial_x_unchecked(false, pi, u);
    (dir, ind)
}

/// Population limits of the direct and indirect effects, integrating over the latent type.
pub fn population_estimands(model: &OutcomeModel, pi: f64) -> Result<EstimandSet> {
    check_probability("pi", pi)?;
    let rule = Rule::composite(&[], 32, 10);
    let tau_dir = rule.integrate(|u| population_terms(model, pi, u).0);
    let tau_ind = rule.integrate(|u| population_terms(model, pi, u).1);
    Ok(EstimandSet {
        tau_dir,
        tau_ind,
        tau_tot: tau_dir + tau_ind,
        flavor: EstimandFlavor::Population,
    })
}

/// Monte Carlo version of [`population_estimands`]; also returns standard errors of (dir, ind, tot).
pub fn population_estimands_mc(
    model: &OutcomeModel,
    pi: f64,
    samples: usize,
    seed: u64,
) -> Result<(EstimandSet, [f64; 3])> {
    check_probability("pi", pi)?;
    if samples < 2 {
        return Err(Error::Config("need at least 2 Monte Carlo samples".into()));
    }
    let mut rng = rng_from(seed);
    let draws: Vec<[f64; 3]> = (0..samples)
        .map(|_| {
            let (d, i) = population_terms(model, pi, rng.random());
            [d, i, d + i]
        })
        .collect();
    let s = samples as f64;
    let mut mean = [0.0; 3];
    let mut se = [0.0; 3];
    for k in 0..3 {
        mean[k] = draws.iter().map(|d| d[k]).sum::<f64>() / s;
        let var = draws.iter().map(|d| (d[k] - mean[k]).powi(2)).sum::<f64>() / (s - 1.0);
        se[k] = (var / s).sqrt();
    }
    Ok((
        EstimandSet {
            tau_dir: mean[0],
            tau_ind: mean[1],
            tau_tot: mean[2],
            flavor: EstimandFlavor::Population,
        },
        se,
    ))
}
