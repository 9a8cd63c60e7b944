//! Bernoulli designs and realized outcomes on a sampled network.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, check_probability, Result};
use crate::network::SampledNetwork;
use crate::outcomes::OutcomeModel;
use crate::rng::rng_from;

/// One randomized experiment on a fixed network.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRealization {
    pub treatment: Vec<bool>,
    /// Treated-neighbour counts.
    pub treated_neighbors: Vec<u32>,
    pub degrees: Vec<u32>,
    /// Treated-neighbour fractions, `0` for isolated units.
    pub fractions: Vec<f64>,
    pub outcomes: Vec<f64>,
}

impl ExperimentRealization {
    pub fn n(&self) -> usize {
        self.outcomes.len()
    }
}

/// Independent Bernoulli(`pi`) treatments.
pub fn assign_bernoulli(n: usize, pi: f64, seed: u64) -> Result<Vec<bool>> {
    check_probability("pi", pi)?;
    let mut rng = rng_from(seed);
    Ok((0..n).map(|_| rng.random::<f64>() < pi).collect())
}

/// Treated-neighbour counts and fractions.
pub fn neighbor_stats(net: &SampledNetwork, treatment: &[bool]) -> Result<(Vec<u32>, Vec<f64>)> {
    check_len("treatment", treatment.len(), net.n())?;
    let counts: Vec<u32> = (0..net.n())
        .map(|i| net.neighbors(i).iter().filter(|&&j| treatment[j as usize]).count() as u32)
        .collect();
    let fractions = counts
        .iter()
        .enumerate()
        .map(|(i, &m)| fraction(m, net.degree(i)))
        .collect();
    Ok((counts, fractions))
}

#[inline]
pub(crate) fn fraction(m: u32, deg: u32) -> f64 {
    if deg == 0 {
        0.0
    } else {
        m as f64 / deg as f64
    }
}

/// Outcomes `f(W_i, frac_i, U_i) + noise_i` for a given assignment.
pub fn realize(
    net: &SampledNetwork,
    model: &OutcomeModel,
    treatment: Vec<bool>,
    noise_seed: u64,
) -> Result<ExperimentRealization> {
    let (treated_neighbors, fractions) = neighbor_stats(net, &treatment)?;
    let types = net.types();
    let mut outcomes: Vec<f64> = (0..net.n())
        .map(|i| model.mean_unchecked(treatment[i], fractions[i], types[i]))
        .collect();
    let sd = model.noise_sd();
    if sd > 0.0 {
        let mut rng = rng_from(noise_seed);
        for y in &mut outcomes {
            let e: f64 = rng.sample(StandardNormal);
            *y += sd * e;
        }
    }
    Ok(ExperimentRealization {
        treatment,
        treated_neighbors,
        degrees: net.degrees(),
        fractions,
        outcomes,
    })
}

/// Assign treatments and realize outcomes with separate seeds.
pub fn run_experiment(
    net: &SampledNetwork,
    model: &OutcomeModel,
    pi: f64,
    treatment_seed: u64,
    noise_seed: u64,
) -> Result<ExperimentRealization> {
    let w = assign_bernoulli(net.n(), pi, treatment_seed)?;
    realize(net, model, w, noise_seed)
}
