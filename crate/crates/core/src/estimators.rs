//! Direct, total and indirect effect estimators.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, check_probability, Error, Result};
use crate::experiment::ExperimentRealization;
use crate::network::SampledNetwork;
use crate::spectral::{top_abs_eigs, EigenOptions, EigenResult};

/// Horvitz-Thompson difference of inverse-propensity weighted arm sums.
pub fn ht_direct(y: &[f64], w: &[bool], pi: f64) -> Result<f64> {
    check_probability("pi", pi)?;
    check_len("treatment", w.len(), y.len())?;
    let n = y.len() as f64;
    let (mut treated, mut control) = (0.0, 0.0);
    for (&yi, &wi) in y.iter().zip(w) {
        if wi {
            treated += yi;
        } else {
            control += yi;
        }
    }
    Ok(treated / (pi * n) - control / ((1.0 - pi) * n))
}

fn arm_means(y: &[f64], w: &[bool]) -> Result<((f64, usize), (f64, usize))> {
    check_len("treatment", w.len(), y.len())?;
    let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0usize, 0.0, 0usize);
    for (&yi, &wi) in y.iter().zip(w) {
        if wi {
            s1 += yi;
            n1 += 1;
        } else {
            s0 += yi;
            n0 += 1;
        }
    }
    if n1 == 0 {
        return Err(Error::DegenerateArm("no treated units"));
    }
    if n0 == 0 {
        return Err(Error::DegenerateArm("no control units"));
    }
    Ok(((s1 / n1 as f64, n1), (s0 / n0 as f64, n0)))
}

/// Treated mean minus control mean.
pub fn hajek_direct(y: &[f64], w: &[bool]) -> Result<f64> {
    let ((m1, _), (m0, _)) = arm_means(y, w)?;
    Ok(m1 - m0)
}

fn check_counts(y: &[f64], m: &[u32], deg: &[u32]) -> Result<()> {
    check_len("treated-neighbour counts", m.len(), y.len())?;
    check_len("degrees", deg.len(), y.len())?;
    if let Some(i) = (0..m.len()).find(|&i| m[i] > deg[i]) {
        return Err(Error::Dimension(format!("unit {i} has more treated neighbours than neighbours")));
    }
    Ok(())
}

/// Inverse-probability estimate of the mean outcome under Bernoulli(`pi_prime`) treatment,
/// from data collected under Bernoulli(`pi`).
pub fn v_hat(y: &[f64], w: &[bool], m: &[u32], deg: &[u32], pi: f64, pi_prime: f64) -> Result<f64> {
    check_probability("pi", pi)?;
    check_probability("pi_prime", pi_prime)?;
    check_len("treatment", w.len(), y.len())?;
    check_counts(y, m, deg)?;
    let up = (pi_prime / pi).ln();
    let down = ((1.0 - pi_prime) / (1.0 - pi)).ln();
    let total: f64 = (0..y.len())
        .map(|i| {
            if y[i] == 0.0 {
                return 0.0;
            }
            let own = u32::from(w[i]);
            let treated = (m[i] + own) as f64;
            let untreated = (deg[i] - m[i] + 1 - own) as f64;
            y[i] * (treated * up + untreated * down).exp()
        })
        .sum();
    Ok(total / y.len() as f64)
}

/// Per-unit weights `M/pi - (N - M)/(1 - pi)` of the unbiased indirect estimator.
pub fn indirect_weights(m: &[u32], deg: &[u32], pi: f64) -> Vec<f64> {
    m.iter()
        .zip(deg)
        .map(|(&mi, &ni)| mi as f64 / pi - (ni - mi) as f64 / (1.0 - pi))
        .collect()
}

/// Derivative of [`v_hat`] at `pi_prime = pi`: unbiased for the total effect.
pub fn unbiased_total(y: &[f64], w: &[bool], m: &[u32], deg: &[u32], pi: f64) -> Result<f64> {
    check_probability("pi", pi)?;
    check_len("treatment", w.len(), y.len())?;
    check_counts(y, m, deg)?;
    let total: f64 = (0..y.len())
        .map(|i| {
            let own = u32::from(w[i]);
            let weight = (m[i] + own) as f64 / pi - (deg[i] - m[i] + 1 - own) as f64 / (1.0 - pi);
            y[i] * weight
        })
        .sum();
    Ok(total / y.len() as f64)
}

/// Unbiased indirect-effect estimator `(1/n) sum Y_i (M_i/pi - (N_i - M_i)/(1 - pi))`.
pub fn unbiased_indirect(y: &[f64], m: &[u32], deg: &[u32], pi: f64) -> Result<f64> {
    check_probability("pi", pi)?;
    check_counts(y, m, deg)?;
    let weights = indirect_weights(m, deg, pi);
    Ok(y.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>() / y.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcBalanceDiagnostics {
    pub rank: usize,
    pub eigenvalues: Vec<f64>,
    pub beta: Vec<f64>,
    /// `|sum_i psi_ki (omega_i + sum_l beta_l psi_li)| / (||psi_k|| ||omega||)` per component.
    pub residuals: Vec<f64>,
}

/// Sum a handful of terms in a canonical order so the result does not depend on their order.
#[inline]
fn canonical_sum(terms: &mut [f64]) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Balance `weights` against `components` with coefficients `beta` and
/// return `(estimate, balanced weights, relative residuals)`.
fn apply_balance(y: &[f64], weights: &[f64], components: &[Vec<f64>], beta: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let n = y.len();
    let r = components.len();
    let mut terms = vec![0.0; r];
    let balanced: Vec<f64> = (0..n)
        .map(|i| {
            for k in 0..r {
                terms[k] = beta[k] * components[k][i];
            }
            weights[i] + canonical_sum(&mut terms)
        })
        .collect();
    let estimate = y.iter().zip(&balanced).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let wnorm = weights.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let residuals = components
        .iter()
        .map(|c| {
            let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            c.iter().zip(&balanced).map(|(a, b)| a * b).sum::<f64>().abs() / (cn * wnorm)
        })
        .collect();
    (estimate, balanced, residuals)
}

/// PC balancing with precomputed eigenvectors (each scaled to squared norm `n`).
pub fn pc_balancing_indirect_with(
    y: &[f64],
    m: &[u32],
    deg: &[u32],
    pi: f64,
    eig: &EigenResult,
) -> Result<(f64, PcBalanceDiagnostics)> {
    check_probability("pi", pi)?;
    check_counts(y, m, deg)?;
    let n = y.len();
    for v in &eig.vectors {
        check_len("eigenvector", v.len(), n)?;
    }
    let weights = indirect_weights(m, deg, pi);
    let beta: Vec<f64> = eig
        .vectors
        .iter()
        .map(|psi| -psi.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect();
    let (estimate, _, residuals) = apply_balance(y, &weights, &eig.vectors, &beta);
    Ok((
        estimate,
        PcBalanceDiagnostics {
            rank: eig.rank(),
            eigenvalues: eig.values.clone(),
            beta,
            residuals,
        },
    ))
}

/// PC balancing: project the indirect weights off the top-`r` adjacency eigenvectors.
pub fn pc_balancing_indirect(
    y: &[f64],
    m: &[u32],
    net: &SampledNetwork,
    pi: f64,
    r: usize,
    opts: &EigenOptions,
) -> Result<(f64, PcBalanceDiagnostics)> {
    let eig = top_abs_eigs(net, r, opts)?;
    pc_balancing_indirect_with(y, m, &net.degrees(), pi, &eig)
}

/// PC-balanced indirect estimate plus the Horvitz-Thompson direct estimate.
pub fn pc_balancing_total_with(
    y: &[f64],
    w: &[bool],
    m: &[u32],
    deg: &[u32],
    pi: f64,
    eig: &EigenResult,
) -> Result<f64> {
    let (ind, _) = pc_balancing_indirect_with(y, m, deg, pi, eig)?;
    Ok(ind + ht_direct(y, w, pi)?)
}

/// Balancing against known eigenfunctions evaluated at the latent types; the
/// coefficients solve the `r x r` Gram system since those vectors are not exactly orthogonal.
pub fn oracle_pc_indirect(
    y: &[f64],
    m: &[u32],
    deg: &[u32],
    pi: f64,
    psi: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    check_probability("pi", pi)?;
    check_counts(y, m, deg)?;
    let n = y.len();
    let r = psi.len();
    if r == 0 {
        return Err(Error::Precondition("oracle balancing needs at least one component".into()));
    }
    for v in psi {
        check_len("eigenfunction values", v.len(), n)?;
    }
    let weights = indirect_weights(m, deg, pi);
    let gram = DMatrix::from_fn(r, r, |a, b| psi[a].iter().zip(&psi[b]).map(|(x, y)| x * y).sum::<f64>());
    let rhs = DVector::from_fn(r, |a, _| -psi[a].iter().zip(&weights).map(|(x, y)| x * y).sum::<f64>());
    let scale = gram.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lu = gram.clone().lu();
    let beta = lu
        .solve(&rhs)
        .filter(|b| b.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular("Gram matrix of the eigenfunction values".into()))?;
    let det = lu.determinant();
    if det.abs() <= 1e-12 * scale.powi(r as i32) {
        return Err(Error::Singular(format!("Gram determinant {det:e}")));
    }
    let beta: Vec<f64> = beta.iter().copied().collect();
    let (estimate, _, residuals) = apply_balance(y, &weights, psi, &beta);
    Ok((estimate, residuals))
}

/// `nu1/pi + nu0/(1 - pi)` with arm-wise mean squared deviations.
pub fn plug_in_variance(y: &[f64], w: &[bool], pi: f64) -> Result<f64> {
    check_probability("pi", pi)?;
    let ((m1, n1), (m0, n0)) = arm_means(y, w)?;
    let (mut s1, mut s0) = (0.0, 0.0);
    for (&yi, &wi) in y.iter().zip(w) {
        if wi {
            s1 += (yi - m1).powi(2);
        } else {
            s0 += (yi - m0).powi(2);
        }
    }
    Ok(s1 / n1 as f64 / pi + s0 / n0 as f64 / (1.0 - pi))
}

/// Estimator names accepted by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    HtDir,
    HajDir,
    UnbTot,
    UnbInd,
    PcInd,
    PcTot,
    OraclePcInd,
    Vhat,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 8] = [
        EstimatorKind::HtDir,
        EstimatorKind::HajDir,
        EstimatorKind::UnbTot,
        EstimatorKind::UnbInd,
        EstimatorKind::PcInd,
        EstimatorKind::PcTot,
        EstimatorKind::OraclePcInd,
        EstimatorKind::Vhat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::HtDir => "ht_dir",
            EstimatorKind::HajDir => "haj_dir",
            EstimatorKind::UnbTot => "unb_tot",
            EstimatorKind::UnbInd => "unb_ind",
            EstimatorKind::PcInd => "pc_ind",
            EstimatorKind::PcTot => "pc_tot",
            EstimatorKind::OraclePcInd => "oracle_pc_ind",
            EstimatorKind::Vhat => "vhat",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown estimator '{name}'")))
    }

    pub fn needs_eigenvectors(self) -> bool {
        matches!(self, EstimatorKind::PcInd | EstimatorKind::PcTot)
    }
}

/// One named estimate with optional balancing diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub estimator: EstimatorKind,
    pub value: f64,
    pub diagnostics: Option<PcBalanceDiagnostics>,
}

/// Inputs shared by every estimator on one realization.
pub struct EstimationContext<'a> {
    pub realization: &'a ExperimentRealization,
    pub pi: f64,
    /// Evaluation probability for [`EstimatorKind::Vhat`].
    pub pi_prime: f64,
    pub eigen: Option<&'a EigenResult>,
    pub oracle_components: Option<&'a [Vec<f64>]>,
}

impl EstimationContext<'_> {
    pub fn estimate(&self, kind: EstimatorKind) -> Result<EstimateRecord> {
        let r = self.realization;
        let (y, w, m, deg) = (&r.outcomes[..], &r.treatment[..], &r.treated_neighbors[..], &r.degrees[..]);
        let need_eigen = || {
            self.eigen
                .ok_or_else(|| Error::Precondition(format!("{} needs eigenvectors", kind.name())))
        };
        let mut diagnostics = None;
        let value = match kind {
            EstimatorKind::HtDir => ht_direct(y, w, self.pi)?,
            EstimatorKind::HajDir => hajek_direct(y, w)?,
            EstimatorKind::UnbTot => unbiased_total(y, w, m, deg, self.pi)?,
            EstimatorKind::UnbInd => unbiased_indirect(y, m, deg, self.pi)?,
            EstimatorKind::PcInd => {
                let (v, d) = pc_balancing_indirect_with(y, m, deg, self.pi, need_eigen()?)?;
                diagnostics = Some(d);
                v
            }
            EstimatorKind::PcTot => {
                let (v, d) = pc_balancing_indirect_with(y, m, deg, self.pi, need_eigen()?)?;
                diagnostics = Some(d);
                v + ht_direct(y, w, self.pi)?
            }
            EstimatorKind::OraclePcInd => {
                let psi = self
                    .oracle_components
                    .ok_or_else(|| Error::Unsupported("oracle balancing needs a known eigensystem".into()))?;
                oracle_pc_indirect(y, m, deg, self.pi, psi)?.0
            }
            EstimatorKind::Vhat => v_hat(y, w, m, deg, self.pi, self.pi_prime)?,
        };
        if !value.is_finite() {
            return Err(Error::Precondition(format!("{} produced a non-finite value", kind.name())));
        }
        Ok(EstimateRecord {
            estimator: kind,
            value,
            diagnostics,
        })
    }
}
