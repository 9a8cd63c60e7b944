//! Parametric graphons, sparsity scaling, and known eigenstructure.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::Rule;

/// A named function form `a: [0, 1] -> [0, inf)` used by rank-1 graphons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Profile {
    /// `low` on `[0, cut]`, `high` on `(cut, 1]`.
    Step { low: f64, high: f64, cut: f64 },
    /// `amplitude * sin(2 pi u) + offset`.
    Sine { amplitude: f64, offset: f64 },
    /// `scale * (u + 1)^4 + offset`.
    Quartic { scale: f64, offset: f64 },
}

impl Profile {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Profile::Step { low, high, cut } => {
                if u > cut {
                    high
                } else {
                    low
                }
            }
            Profile::Sine { amplitude, offset } => amplitude * (2.0 * PI * u).sin() + offset,
            Profile::Quartic { scale, offset } => scale * (u + 1.0).powi(4) + offset,
        }
    }

    fn breaks(&self) -> Vec<f64> {
        match *self {
            Profile::Step { cut, .. } => vec![cut],
            _ => Vec::new(),
        }
    }

    fn sup(&self) -> f64 {
        match *self {
            Profile::Step { low, high, .. } => low.abs().max(high.abs()),
            Profile::Sine { amplitude, offset } => amplitude.abs() + offset.abs(),
            Profile::Quartic { scale, offset } => (scale + offset).abs().max((16.0 * scale + offset).abs()),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Profile::Step { low, high, cut } => low >= 0.0 && high >= 0.0 && (0.0..=1.0).contains(&cut),
            Profile::Sine { amplitude, offset } => offset - amplitude.abs() >= 0.0,
            Profile::Quartic { scale, offset } => scale >= 0.0 && scale + offset >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("profile {self:?} is negative somewhere on [0, 1]")))
        }
    }
}

/// A symmetric, nonnegative kernel on `[0, 1]^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphonSpec {
    Constant {
        value: f64,
    },
    /// `within * 1{same block} + base`, blocks cut at the interior points `breaks`.
    BlockModel {
        breaks: Vec<f64>,
        within: f64,
        base: f64,
    },
    /// `a(u) a(v)`.
    Rank1Product {
        profile: Profile,
    },
    /// `sum_k c_k (u v)^k` for `k = 1..=coefficients.len()`.
    Rank3Poly {
        coefficients: Vec<f64>,
    },
    /// `base + step * floor(levels * min(u, v))`.
    StepMin {
        levels: usize,
        base: f64,
        step: f64,
    },
    /// `global^2 + 1{u, v in I_k} community[k]^2`, communities cut at `breaks`.
    DisjointCommunities {
        breaks: Vec<f64>,
        global: f64,
        community: Vec<f64>,
    },
    /// `a * 1{u <= eta or v <= eta}`.
    Star {
        eta: f64,
        a: f64,
    },
}

/// Sparsity scaling `rho_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SparsityRule {
    Dense,
    /// `rho_n = n^(-exponent)`.
    PowerLaw { exponent: f64 },
}

impl SparsityRule {
    pub fn rho(&self, n: usize) -> f64 {
        match *self {
            SparsityRule::Dense => 1.0,
            SparsityRule::PowerLaw { exponent } => (n.max(1) as f64).powf(-exponent),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SparsityRule::Dense => Ok(()),
            SparsityRule::PowerLaw { exponent } if exponent >= 0.0 && exponent.is_finite() => Ok(()),
            SparsityRule::PowerLaw { exponent } => Err(Error::Domain {
                what: "sparsity exponent",
                value: exponent,
                expected: "exponent >= 0",
            }),
        }
    }
}

fn block_index(breaks: &[f64], u: f64) -> usize {
    breaks.iter().take_while(|&&b| u >= b).count()
}

fn block_probabilities(breaks: &[f64]) -> Vec<f64> {
    let mut cuts = vec![0.0];
    cuts.extend_from_slice(breaks);
    cuts.push(1.0);
    cuts.windows(2).map(|w| w[1] - w[0]).collect()
}

impl GraphonSpec {
    /// `G(u, v)`.
    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        match self {
            GraphonSpec::Constant { value } => *value,
            GraphonSpec::BlockModel { breaks, within, base } => {
                if block_index(breaks, u) == block_index(breaks, v) {
                    within + base
                } else {
                    *base
                }
            }
            GraphonSpec::Rank1Product { profile } => profile.eval(u) * profile.eval(v),
            GraphonSpec::Rank3Poly { coefficients } => {
                let t = u * v;
                // Horner in t, lowest power is t^1
                coefficients.iter().rev().fold(0.0, |acc, c| (acc + c) * t)
            }
            GraphonSpec::StepMin { levels, base, step } => {
                let m = u.min(v);
                let level = ((*levels as f64 * m).floor() as usize).min(levels.saturating_sub(1));
                base + step * level as f64
            }
            GraphonSpec::DisjointCommunities { breaks, global, community } => {
                let (ku, kv) = (block_index(breaks, u), block_index(breaks, v));
                let within = if ku == kv { community[ku] * community[ku] } else { 0.0 };
                global * global + within
            }
            GraphonSpec::Star { eta, a } => {
                if u <= *eta || v <= *eta {
                    *a
                } else {
                    0.0
                }
            }
        }
    }

    /// Checked evaluation of `G(u, v)` for `u, v` in `[0, 1]`.
    pub fn eval_checked(&self, u: f64, v: f64) -> Result<f64> {
        for (what, x) in [("u", u), ("v", v)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Domain {
                    what,
                    value: x,
                    expected: "[0, 1]",
                });
            }
        }
        Ok(self.eval(u, v))
    }

    /// Edge probability `min(1, rho G(u, v))`.
    #[inline]
    pub fn edge_probability(&self, rho: f64, u: f64, v: f64) -> f64 {
        (rho * self.eval(u, v)).min(1.0)
    }

    /// Upper bound on `G` over the unit square.
    pub fn sup(&self) -> f64 {
        match self {
            GraphonSpec::Constant { value } => *value,
            GraphonSpec::BlockModel { within, base, .. } => (within + base).max(*base),
            GraphonSpec::Rank1Product { profile } => profile.sup().powi(2),
            GraphonSpec::Rank3Poly { coefficients } => {
                // sup over t = uv in [0, 1] on a fine grid, padded
                const GRID: usize = 1 << 16;
                let m = (0..=GRID)
                    .map(|k| {
                        let t = k as f64 / GRID as f64;
                        coefficients.iter().rev().fold(0.0, |acc, c| (acc + c) * t)
                    })
                    .fold(0.0, f64::max);
                let lip: f64 = coefficients.iter().enumerate().map(|(k, c)| c.abs() * (k + 1) as f64).sum();
                m + lip / (2 * GRID) as f64
            }
            GraphonSpec::StepMin { levels, base, step } => base.max(base + step * (levels.saturating_sub(1)) as f64),
            GraphonSpec::DisjointCommunities { global, community, .. } => {
                global * global + community.iter().map(|c| c * c).fold(0.0, f64::max)
            }
            GraphonSpec::Star { a, .. } => *a,
        }
    }

    /// Points in `[0, 1]` where `G(u, .)` may be discontinuous.
    pub fn breaks(&self) -> Vec<f64> {
        match self {
            GraphonSpec::Constant { .. } | GraphonSpec::Rank3Poly { .. } => Vec::new(),
            GraphonSpec::BlockModel { breaks, .. } | GraphonSpec::DisjointCommunities { breaks, .. } => breaks.clone(),
            GraphonSpec::Rank1Product { profile } => profile.breaks(),
            GraphonSpec::StepMin { levels, .. } => (1..*levels).map(|k| k as f64 / *levels as f64).collect(),
            GraphonSpec::Star { eta, .. } => vec![*eta],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let check_breaks = |breaks: &[f64]| -> Result<()> {
            let sorted = breaks.windows(2).all(|w| w[0] < w[1]);
            let inside = breaks.iter().all(|b| *b > 0.0 && *b < 1.0);
            if sorted && inside {
                Ok(())
            } else {
                Err(Error::Config(format!("breaks {breaks:?} must be increasing inside (0, 1)")))
            }
        };
        match self {
            GraphonSpec::Constant { value } if *value < 0.0 => bad(format!("constant graphon {value} < 0")),
            GraphonSpec::BlockModel { breaks, within, base } => {
                check_breaks(breaks)?;
                if *base < 0.0 || within + base < 0.0 {
                    return bad("block model weights must be nonnegative".into());
                }
                Ok(())
            }
            GraphonSpec::Rank1Product { profile } => profile.validate(),
            GraphonSpec::Rank3Poly { coefficients } => {
                if coefficients.is_empty() {
                    return bad("polynomial graphon needs coefficients".into());
                }
                let neg = (0..=1000).any(|k| {
                    let t = k as f64 / 1000.0;
                    coefficients.iter().rev().fold(0.0, |acc, c| (acc + c) * t) < -1e-12
                });
                if neg {
                    return bad("polynomial graphon is negative somewhere".into());
                }
                Ok(())
            }
            GraphonSpec::StepMin { levels, base, step } => {
                if *levels == 0 || *base < 0.0 || base + step * (*levels as f64 - 1.0) < 0.0 {
                    return bad("step-min graphon must have levels >= 1 and nonnegative values".into());
                }
                Ok(())
            }
            GraphonSpec::DisjointCommunities { breaks, community, .. } => {
                check_breaks(breaks)?;
                if community.len() != breaks.len() + 1 {
                    return bad(format!(
                        "{} community weights for {} communities",
                        community.len(),
                        breaks.len() + 1
                    ));
                }
                Ok(())
            }
            GraphonSpec::Star { eta, a } => {
                if !(*eta > 0.0 && *eta < 1.0) || *a < 0.0 {
                    return bad("star graphon needs 0 < eta < 1 and a >= 0".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Piecewise-constant representation: interior cuts and the block matrix.
    fn block_structure(&self) -> Option<(Vec<f64>, DMatrix<f64>)> {
        match self {
            GraphonSpec::Constant { value } => Some((Vec::new(), DMatrix::from_element(1, 1, *value))),
            GraphonSpec::BlockModel { breaks, within, base } => {
                let k = breaks.len() + 1;
                let m = DMatrix::from_fn(k, k, |a, b| if a == b { within + base } else { *base });
                Some((breaks.clone(), m))
            }
            GraphonSpec::StepMin { levels, base, step } => {
                let m = DMatrix::from_fn(*levels, *levels, |a, b| base + step * a.min(b) as f64);
                Some((self.breaks(), m))
            }
            GraphonSpec::DisjointCommunities { breaks, global, community } => {
                let k = breaks.len() + 1;
                let m = DMatrix::from_fn(k, k, |a, b| {
                    global * global + if a == b { community[a] * community[a] } else { 0.0 }
                });
                Some((breaks.clone(), m))
            }
            GraphonSpec::Star { eta, a } => {
                let m = DMatrix::from_row_slice(2, 2, &[*a, *a, *a, 0.0]);
                Some((vec![*eta], m))
            }
            GraphonSpec::Rank1Product { .. } | GraphonSpec::Rank3Poly { .. } => None,
        }
    }

    /// Declared eigenpairs `(lambda_k, psi_k)` with `E[psi_k^2] = 1`, ordered by `|lambda|` descending.
    pub fn true_eigensystem(&self) -> Result<Eigensystem> {
        self.validate()?;
        let mut pairs = if let Some((cuts, b)) = self.block_structure() {
            block_eigensystem(&cuts, &b)
        } else {
            match self {
                GraphonSpec::Rank1Product { profile } => {
                    let rule = Rule::composite(&profile.breaks(), 32, 12);
                    let second = rule.integrate(|u| profile.eval(u).powi(2));
                    if second <= 0.0 {
                        Vec::new()
                    } else {
                        vec![EigenPair {
                            lambda: second,
                            psi: Eigenfunction::Profile {
                                profile: profile.clone(),
                                scale: 1.0 / second.sqrt(),
                            },
                        }]
                    }
                }
                GraphonSpec::Rank3Poly { coefficients } => poly_eigensystem(coefficients)?,
                _ => {
                    return Err(Error::Unsupported(format!("no known eigenstructure for {self:?}")));
                }
            }
        };
        pairs.sort_by(|a, b| {
            b.lambda
                .abs()
                .total_cmp(&a.lambda.abs())
                .then(b.lambda.total_cmp(&a.lambda))
        });
        Ok(Eigensystem { pairs })
    }
}

fn block_eigensystem(cuts: &[f64], b: &DMatrix<f64>) -> Vec<EigenPair> {
    let probs = block_probabilities(cuts);
    let k = probs.len();
    let sq: Vec<f64> = probs.iter().map(|p| p.sqrt()).collect();
    let m = DMatrix::from_fn(k, k, |i, j| sq[i] * b[(i, j)] * sq[j]);
    let eig = SymmetricEigen::new(m);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    (0..k)
        .filter(|&c| eig.eigenvalues[c].abs() > 1e-12 * scale.max(f64::MIN_POSITIVE))
        .map(|c| {
            let values = (0..k).map(|i| eig.eigenvectors[(i, c)] / sq[i]).collect();
            EigenPair {
                lambda: eig.eigenvalues[c],
                psi: Eigenfunction::Blocks {
                    breaks: cuts.to_vec(),
                    values,
                },
            }
        })
        .collect()
}

fn poly_eigensystem(coefficients: &[f64]) -> Result<Vec<EigenPair>> {
    let k = coefficients.len();
    // Gram matrix of the monomials u^1..u^k under Uniform[0, 1]
    let gram = DMatrix::from_fn(k, k, |a, b| 1.0 / (a + b + 3) as f64);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Singular("monomial Gram matrix".into()))?;
    let l = chol.l();
    let c = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(coefficients));
    let m = l.transpose() * &c * &l;
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let lt_inv = l
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::Singular("monomial Cholesky factor".into()))?;
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    Ok((0..k)
        .filter(|&j| eig.eigenvalues[j].abs() > 1e-12 * scale.max(f64::MIN_POSITIVE))
        .map(|j| {
            let coeffs = &lt_inv * eig.eigenvectors.column(j);
            EigenPair {
                lambda: eig.eigenvalues[j],
                psi: Eigenfunction::Monomials {
                    coefficients: coeffs.iter().copied().collect(),
                },
            }
        })
        .collect())
}

/// An eigenfunction `psi_k` of a graphon.
#[derive(Debug, Clone, PartialEq)]
pub enum Eigenfunction {
    /// Piecewise constant: `values[b]` on block `b`.
    Blocks { breaks: Vec<f64>, values: Vec<f64> },
    /// `scale * a(u)`.
    Profile { profile: Profile, scale: f64 },
    /// `sum_k coefficients[k] u^(k+1)`.
    Monomials { coefficients: Vec<f64> },
}

impl Eigenfunction {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Eigenfunction::Blocks { breaks, values } => values[block_index(breaks, u)],
            Eigenfunction::Profile { profile, scale } => scale * profile.eval(u),
            Eigenfunction::Monomials { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| (acc + c) * u)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    pub psi: Eigenfunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub pairs: Vec<EigenPair>,
}

impl Eigensystem {
    pub fn rank(&self) -> usize {
        self.pairs.len()
    }

    /// `sum_k lambda_k psi_k(u) psi_k(v)`.
    pub fn reconstruct(&self, u: f64, v: f64) -> f64 {
        self.pairs.iter().map(|p| p.lambda * p.psi.eval(u) * p.psi.eval(v)).sum()
    }

    /// `psi_k(types_i)` for the leading `r` pairs, one vector per pair.
    pub fn evaluate_on(&self, types: &[f64], r: usize) -> Result<Vec<Vec<f64>>> {
        if r > self.rank() {
            return Err(Error::Unsupported(format!(
                "requested {r} eigenfunctions from a rank-{} graphon",
                self.rank()
            )));
        }
        Ok(self.pairs[..r]
            .iter()
            .map(|p| types.iter().map(|&u| p.psi.eval(u)).collect())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn all_presets() -> Vec<GraphonSpec> {
        presets::names()
            .iter()
            .map(|n| presets::lookup(n).unwrap().graphon)
            .chain([
                GraphonSpec::Star { eta: 0.1, a: 0.5 },
                GraphonSpec::DisjointCommunities {
                    breaks: vec![0.25, 0.6],
                    global: 0.3,
                    community: vec![0.5, 0.7, 0.4],
                },
            ])
            .collect()
    }

    #[test]
    fn constant_and_sbm_values() {
        let c = GraphonSpec::Constant { value: 0.4 };
        assert_eq!(c.eval(0.3, 0.9), 0.4);
        let sbm = presets::lookup("appendix_a_1").unwrap().graphon;
        assert!((sbm.eval(0.1, 0.2) - 0.8).abs() < 1e-15);
        assert!((sbm.eval(0.1, 0.5) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn edge_probability_clips() {
        let c = GraphonSpec::Constant { value: 1.2 };
        assert_eq!(c.edge_probability(1.0, 0.1, 0.2), 1.0);
        let c = GraphonSpec::Constant { value: 0.4 };
        assert!((c.edge_probability(0.5, 0.1, 0.2) - 0.2).abs() < 1e-15);
        assert_eq!(c.edge_probability(1.0, 0.1, 0.2), 0.4);
    }

    #[test]
    fn eval_checked_rejects_out_of_range() {
        let c = GraphonSpec::Constant { value: 0.4 };
        assert!(c.eval_checked(1.5, 0.2).is_err());
        assert!(c.eval_checked(0.5, 0.2).is_ok());
    }

    #[test]
    fn symmetric_nonnegative_and_bounded() {
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 / 40.0).collect();
        for g in all_presets() {
            g.validate().unwrap();
            let sup = g.sup();
            for &u in &grid {
                for &v in &grid {
                    let x = g.eval(u, v);
                    assert_eq!(x, g.eval(v, u), "{g:?}");
                    assert!(x >= 0.0 && x <= sup + 1e-12, "{g:?} at ({u}, {v}) = {x}, sup {sup}");
                }
            }
        }
    }

    #[test]
    fn eigensystems_reconstruct_and_are_orthonormal() {
        let grid: Vec<f64> = (0..=37).map(|k| (k as f64 + 0.13) / 38.3).collect();
        for g in all_presets() {
            let eig = g.true_eigensystem().unwrap();
            for &u in &grid {
                for &v in &grid {
                    assert!((eig.reconstruct(u, v) - g.eval(u, v)).abs() < 1e-10, "{g:?}");
                }
            }
            let rule = Rule::composite(&g.breaks(), 64, 12);
            for a in &eig.pairs {
                for b in &eig.pairs {
                    let ip = rule.integrate(|u| a.psi.eval(u) * b.psi.eval(u));
                    let want = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
                    assert!((ip - want).abs() < 1e-9, "{g:?}: {ip}");
                }
            }
            let lam: Vec<f64> = eig.pairs.iter().map(|p| p.lambda.abs()).collect();
            assert!(lam.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn sbm_is_rank_three_and_constant_is_rank_one() {
        let sbm = presets::lookup("appendix_a_1").unwrap().graphon;
        let eig = sbm.true_eigensystem().unwrap();
        assert_eq!(eig.rank(), 3);
        assert!((eig.pairs[0].lambda - 0.4).abs() < 1e-12);
        assert!((eig.pairs[1].lambda - 0.2).abs() < 1e-12);
        assert!((eig.pairs[2].lambda - 0.2).abs() < 1e-12);

        let c = GraphonSpec::Constant { value: 0.4 }.true_eigensystem().unwrap();
        assert_eq!(c.rank(), 1);
        assert!((c.pairs[0].lambda - 0.4).abs() < 1e-15);
        assert!((c.pairs[0].psi.eval(0.77).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank1_normalization_matches_quadrature() {
        let profile = Profile::Sine {
            amplitude: 0.3,
            offset: 0.5,
        };
        let g = GraphonSpec::Rank1Product { profile: profile.clone() };
        let eig = g.true_eigensystem().unwrap();
        assert_eq!(eig.rank(), 1);
        // E[a^2] = offset^2 + amplitude^2 / 2
        assert!((eig.pairs[0].lambda - (0.25 + 0.045)).abs() < 1e-12);
        let u = 0.3;
        assert!((eig.pairs[0].psi.eval(u) - profile.eval(u) / 0.295f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn poly_kernel_has_rank_three() {
        let g = presets::lookup("appendix_a_2").unwrap().graphon;
        assert_eq!(g.true_eigensystem().unwrap().rank(), 3);
        assert!((g.sup() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn sparsity_rule() {
        assert_eq!(SparsityRule::Dense.rho(1000), 1.0);
        let r = SparsityRule::PowerLaw { exponent: 0.2 }.rho(100_000);
        assert!((r - 0.1).abs() < 1e-12);
        for n in [1, 2, 10, 1_000_000] {
            let r = SparsityRule::PowerLaw { exponent: 0.4 }.rho(n);
            assert!(r > 0.0 && r <= 1.0);
        }
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let err = serde_json::from_str::<GraphonSpec>(r#"{"kind": "hyperbolic", "value": 1}"#);
        assert!(err.is_err());
        let ok: GraphonSpec = serde_json::from_str(r#"{"kind": "constant", "value": 0.4}"#).unwrap();
        assert_eq!(ok, GraphonSpec::Constant { value: 0.4 });
    }
}
