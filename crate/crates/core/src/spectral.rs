//! Leading eigenpairs (by absolute eigenvalue) of a sparse adjacency matrix.
//!
//! The iterative path is a block Rayleigh-Ritz method: the search space is
//! grown with the residuals of the current leading Ritz vectors, which keeps
//! it inside the block Krylov space of the start block, and is restarted from
//! the best Ritz vectors when it fills up. Only sparse matrix products touch
//! the adjacency matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::network::SampledNetwork;
use crate::rng::rng_from;

/// Largest `n` for which [`EigenMethod::Auto`] uses a dense decomposition.
pub const DENSE_MAX_N: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    #[default]
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EigenOptions {
    /// Residual tolerance relative to the largest `|eigenvalue|`.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub method: EigenMethod,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 1000,
            seed: 0,
            method: EigenMethod::Auto,
        }
    }
}

/// Eigenpairs with vectors scaled to squared norm `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `||E v - lambda v|| / ||v||` for each pair.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
}

impl EigenResult {
    pub fn rank(&self) -> usize {
        self.values.len()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Flip so the first entry of largest magnitude is positive.
fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// `|lambda|` descending, then signed value descending, then the vectors compared entrywise (larger first).
fn pair_order(a: (f64, &[f64]), b: (f64, &[f64])) -> Ordering {
    b.0.abs()
        .total_cmp(&a.0.abs())
        .then(b.0.total_cmp(&a.0))
        .then_with(|| {
            a.1.iter()
                .zip(b.1)
                .find(|(x, y)| x != y)
                .map_or(Ordering::Equal, |(x, y)| y.total_cmp(x))
        })
}

fn residual(net: &SampledNetwork, lambda: f64, v: &[f64]) -> f64 {
    let mut av = vec![0.0; v.len()];
    net.matvec(v, &mut av);
    axpy(-lambda, v, &mut av);
    let nv = norm(v);
    if nv == 0.0 {
        0.0
    } else {
        norm(&av) / nv
    }
}

fn finish(net: &SampledNetwork, mut pairs: Vec<(f64, Vec<f64>)>, r: usize, iterations: usize) -> EigenResult {
    let scale = (net.n() as f64).sqrt();
    for (_, v) in &mut pairs {
        let nv = norm(v);
        v.iter_mut().for_each(|x| *x *= scale / nv);
        orient(v);
    }
    pairs.sort_by(|a, b| pair_order((a.0, &a.1), (b.0, &b.1)));
    pairs.truncate(r);
    let residual_norms = pairs.iter().map(|(l, v)| residual(net, *l, v)).collect();
    let (values, vectors) = pairs.into_iter().unzip();
    EigenResult {
        values,
        vectors,
        residual_norms,
        iterations,
    }
}

/// Top-`r` eigenpairs of the adjacency matrix of `net` by absolute eigenvalue.
pub fn top_abs_eigs(net: &SampledNetwork, r: usize, opts: &EigenOptions) -> Result<EigenResult> {
    let n = net.n();
    if r == 0 || r >= n {
        return Err(Error::Precondition(format!("need 1 <= r < n, got r = {r}, n = {n}")));
    }
    let dense = match opts.method {
        EigenMethod::Dense => true,
        EigenMethod::Iterative => false,
        EigenMethod::Auto => n <= DENSE_MAX_N,
    };
    if dense {
        Ok(dense_eigs(net, r))
    } else {
        iterative_eigs(net, r, opts)
    }
}

/// Full dense decomposition, truncated to the leading `r` pairs.
pub fn dense_eigs(net: &SampledNetwork, r: usize) -> EigenResult {
    let n = net.n();
    let a = DMatrix::from_row_slice(n, n, &net.to_dense());
    let eig = SymmetricEigen::new(a);
    let pairs = (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
        .collect();
    finish(net, pairs, r.min(n), 0)
}

/// Orthonormalize `v` against `basis` (two passes); `None` if nothing new remains.
fn orthonormalize(v: &mut [f64], groups: &[&[Vec<f64>]]) -> Option<()> {
    let start = norm(v);
    if start == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for b in groups.iter().flat_map(|g| g.iter()) {
            let c = dot(b, v);
            axpy(-c, b, v);
        }
    }
    let nv = norm(v);
    if nv <= 1e-10 * start {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= nv);
    Some(())
}

fn apply_block(net: &SampledNetwork, block: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = net.n();
    let width = block.len();
    if width == 1 {
        let mut out = vec![0.0; n];
        net.matvec(&block[0], &mut out);
        return vec![out];
    }
    let mut packed = vec![0.0; n * width];
    for (c, v) in block.iter().enumerate() {
        for (i, x) in v.iter().enumerate() {
            packed[i * width + c] = *x;
        }
    }
    let mut out = vec![0.0; n * width];
    net.matmul_rows(&packed, width, &mut out);
    (0..width)
        .map(|c| (0..n).map(|i| out[i * width + c]).collect())
        .collect()
}

fn combine(columns: &[Vec<f64>], coeffs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0; columns[0].len()];
    for (c, col) in coeffs.zip(columns) {
        axpy(c, col, &mut out);
    }
    out
}

fn iterative_eigs(net: &SampledNetwork, r: usize, opts: &EigenOptions) -> Result<EigenResult> {
    let n = net.n();
    let block = (r + 2).min(n);
    let max_basis = (6 * block).max(40).min(n);
    let keep = (2 * block).min(max_basis - block).max(block);
    let mut rng = rng_from(opts.seed);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut images: Vec<Vec<f64>> = Vec::new();
    let mut fresh: Vec<Vec<f64>> = Vec::new();
    while fresh.len() < block {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if orthonormalize(&mut v, &[&fresh]).is_some() {
            fresh.push(v);
        }
    }
    images.extend(apply_block(net, &fresh));
    basis.extend(fresh);

    let mut last_residuals = Vec::new();
    for iter in 0..opts.max_iter {
        let k = basis.len();
        let mut t = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let v = 0.5 * (dot(&basis[a], &images[b]) + dot(&basis[b], &images[a]));
                t[(a, b)] = v;
                t[(b, a)] = v;
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .abs()
                .total_cmp(&eig.eigenvalues[a].abs())
                .then(eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]))
        });

        let wanted = block.min(k);
        let mut ritz = Vec::with_capacity(wanted);
        let mut ritz_images = Vec::with_capacity(wanted);
        let mut residuals = Vec::with_capacity(wanted);
        let mut res_norms = Vec::with_capacity(wanted);
        for &j in &order[..wanted] {
            let y = eig.eigenvectors.column(j);
            let x = combine(&basis, y.iter().copied());
            let ax = combine(&images, y.iter().copied());
            let mut res = ax.clone();
            axpy(-eig.eigenvalues[j], &x, &mut res);
            res_norms.push(norm(&res));
            ritz.push(x);
            ritz_images.push(ax);
            residuals.push(res);
        }
        let scale = eig.eigenvalues[order[0]].abs().max(f64::MIN_POSITIVE);
        let threshold = opts.tol * scale;
        last_residuals = res_norms[..r.min(wanted)].to_vec();
        if wanted >= r && res_norms[..r].iter().all(|&x| x <= threshold) {
            let pairs = order[..r]
                .iter()
                .zip(ritz)
                .map(|(&j, x)| (eig.eigenvalues[j], x))
                .collect();
            return Ok(finish(net, pairs, r, iter + 1));
        }

        if k + block > max_basis {
            // thick restart from the leading Ritz vectors
            let kept = keep.min(k);
            let mut new_basis = ritz;
            let mut new_images = ritz_images;
            for &j in &order[wanted..kept] {
                let y = eig.eigenvectors.column(j);
                new_basis.push(combine(&basis, y.iter().copied()));
                new_images.push(combine(&images, y.iter().copied()));
            }
            basis = new_basis;
            images = new_images;
        }

        let mut fresh = Vec::new();
        for (res, &rn) in residuals.into_iter().zip(&res_norms) {
            if rn <= threshold * 1e-3 {
                continue;
            }
            let mut v = res;
            if orthonormalize(&mut v, &[&basis, &fresh]).is_some() {
                fresh.push(v);
            }
        }
        if fresh.is_empty() {
            // the residuals lie in the current space; perturb with a random direction
            let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            if orthonormalize(&mut v, &[&basis]).is_none() {
                return Err(Error::SolverNonConvergence {
                    iterations: iter + 1,
                    residuals: last_residuals,
                });
            }
            fresh.push(v);
        }
        images.extend(apply_block(net, &fresh));
        basis.extend(fresh);
    }
    Err(Error::SolverNonConvergence {
        iterations: opts.max_iter,
        residuals: last_residuals,
    })
}

/// Largest principal angle (radians) between the spans of two sets of vectors.
pub fn max_principal_angle(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let orth = |vs: &[Vec<f64>]| {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for v in vs {
            let mut v = v.clone();
            if orthonormalize(&mut v, &[&out]).is_some() {
                out.push(v);
            }
        }
        out
    };
    let (qa, qb) = (orth(a), orth(b));
    let m = DMatrix::from_fn(qa.len(), qb.len(), |i, j| dot(&qa[i], &qb[j]));
    let s = m.svd(false, false).singular_values;
    let smallest = s.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
    // acos loses precision near 1; use the sine form instead
    (1.0 - smallest * smallest).max(0.0).sqrt().asin()
}
