//! Sampled exposure graphs in compressed sparse row form.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphon::GraphonSpec;
use crate::quadrature::Rule;
use crate::rng::{derive, pair_uniform, rng_from};

/// Pair enumeration is used up to this many nodes regardless of density.
pub const DIRECT_MAX_N: usize = 2000;
/// Pair enumeration is also used when the largest edge probability exceeds this.
pub const DIRECT_MIN_PMAX: f64 = 0.3;

#[derive(Debug, Clone, Copy)]
pub struct SamplingOptions {
    /// Refuse to sample when the expected number of undirected edges exceeds this.
    pub max_expected_edges: f64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self {
            max_expected_edges: 1.5e8,
        }
    }
}

/// Undirected simple graph with latent node types. Both directions of every
/// edge are stored and column indices within a row are sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledNetwork {
    types: Vec<f64>,
    offsets: Vec<usize>,
    cols: Vec<u32>,
}

impl SampledNetwork {
    /// Build from an explicit undirected edge list (0-based endpoints).
    pub fn from_edges(types: Vec<f64>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = types.len();
        if n > u32::MAX as usize {
            return Err(Error::Feasibility(format!("{n} nodes exceed the index width")));
        }
        let mut upper: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Dimension(format!("edge ({a}, {b}) in a graph of {n} nodes")));
            }
            if a == b {
                return Err(Error::Config(format!("self-loop at node {a}")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            upper[i].push(j as u32);
        }
        for row in &mut upper {
            row.sort_unstable();
            row.dedup();
        }
        Ok(Self::from_upper(types, &upper))
    }

    fn from_upper(types: Vec<f64>, upper: &[Vec<u32>]) -> Self {
        let n = types.len();
        let mut deg = vec![0usize; n];
        for (i, row) in upper.iter().enumerate() {
            deg[i] += row.len();
            for &j in row {
                deg[j as usize] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &deg {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cols = vec![0u32; *offsets.last().unwrap()];
        // lower-triangle entries first (ascending i), then the row's own upper entries
        let mut cursor: Vec<usize> = offsets[..n].to_vec();
        for (i, row) in upper.iter().enumerate() {
            for &j in row {
                let j = j as usize;
                cols[cursor[j]] = i as u32;
                cursor[j] += 1;
            }
        }
        for (i, row) in upper.iter().enumerate() {
            let start = offsets[i + 1] - row.len();
            cols[start..offsets[i + 1]].copy_from_slice(row);
        }
        Self { types, offsets, cols }
    }

    pub fn n(&self) -> usize {
        self.types.len()
    }

    pub fn types(&self) -> &[f64] {
        &self.types
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.cols[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> u32 {
        (self.offsets[i + 1] - self.offsets[i]) as u32
    }

    pub fn degrees(&self) -> Vec<u32> {
        (0..self.n()).map(|i| self.degree(i)).collect()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.cols.len() / 2
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&(j as u32)).is_ok()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn columns(&self) -> &[u32] {
        &self.cols
    }

    /// `out = E x`.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().with_min_len(1024).for_each(|(i, o)| {
            *o = self.neighbors(i).iter().map(|&j| x[j as usize]).sum();
        });
    }

    /// `out = E X` for a row-major `n x width` block.
    pub fn matmul_rows(&self, x: &[f64], width: usize, out: &mut [f64]) {
        out.par_chunks_mut(width).enumerate().with_min_len(256).for_each(|(i, o)| {
            o.iter_mut().for_each(|v| *v = 0.0);
            for &j in self.neighbors(i) {
                let src = &x[j as usize * width..(j as usize + 1) * width];
                for (a, b) in o.iter_mut().zip(src) {
                    *a += b;
                }
            }
        });
    }

    /// Dense 0/1 adjacency, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for &j in self.neighbors(i) {
                out[i * n + j as usize] = 1.0;
            }
        }
        out
    }
}

/// Expected number of undirected edges, `n(n-1)/2 * E[min(1, rho G)]`, by 2-D quadrature.
pub fn expected_edges(spec: &GraphonSpec, n: usize, rho: f64) -> f64 {
    let rule = Rule::composite(&spec.breaks(), 8, 8);
    let mut mean = 0.0;
    for (&u, &wu) in rule.nodes.iter().zip(&rule.weights) {
        for (&v, &wv) in rule.nodes.iter().zip(&rule.weights) {
            mean += wu * wv * spec.edge_probability(rho, u, v);
        }
    }
    0.5 * n as f64 * (n as f64 - 1.0) * mean
}

/// Draw latent types and edges. `seed` fully determines the result.
pub fn sample_network(spec: &GraphonSpec, n: usize, rho: f64, seed: u64) -> Result<SampledNetwork> {
    sample_network_with(spec, n, rho, seed, SamplingOptions::default())
}

pub fn sample_network_with(
    spec: &GraphonSpec,
    n: usize,
    rho: f64,
    seed: u64,
    opts: SamplingOptions,
) -> Result<SampledNetwork> {
    if n < 2 {
        return Err(Error::Precondition(format!("need at least 2 nodes, got {n}")));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Domain {
            what: "rho",
            value: rho,
            expected: "0 < rho <= 1",
        });
    }
    spec.validate()?;
    if n > u32::MAX as usize {
        return Err(Error::Feasibility(format!("{n} nodes exceed the index width")));
    }
    let expected = expected_edges(spec, n, rho);
    if expected > opts.max_expected_edges {
        return Err(Error::Feasibility(format!(
            "expected {expected:.3e} edges exceeds the cap of {:.3e}",
            opts.max_expected_edges
        )));
    }

    let mut type_rng = rng_from(derive(seed, &[0]));
    let types: Vec<f64> = (0..n).map(|_| type_rng.random::<f64>()).collect();
    let edge_seed = derive(seed, &[1]);
    let p_max = (rho * spec.sup()).min(1.0);

    let upper: Vec<Vec<u32>> = if p_max <= 0.0 {
        vec![Vec::new(); n]
    } else if n <= DIRECT_MAX_N || p_max > DIRECT_MIN_PMAX {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let ui = types[i];
                ((i + 1)..n)
                    .filter(|&j| pair_uniform(edge_seed, i as u64, j as u64) < spec.edge_probability(rho, ui, types[j]))
                    .map(|j| j as u32)
                    .collect()
            })
            .collect()
    } else {
        // geometric skipping over candidates at rate p_max, then thinning
        let log_q = (-p_max).ln_1p();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_from(derive(edge_seed, &[i as u64]));
                let ui = types[i];
                let mut row = Vec::new();
                let mut j = i;
                loop {
                    let r: f64 = rng.random();
                    let skip = ((-r).ln_1p() / log_q).floor();
                    if !skip.is_finite() || skip >= (n - j) as f64 {
                        break;
                    }
                    j += skip as usize + 1;
                    if j >= n {
                        break;
                    }
                    let keep: f64 = rng.random();
                    if keep * p_max < spec.edge_probability(rho, ui, types[j]) {
                        row.push(j as u32);
                    }
                }
                row
            })
            .collect()
    };
    Ok(SampledNetwork::from_upper(types, &upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn check_structure(net: &SampledNetwork) {
        for i in 0..net.n() {
            let row = net.neighbors(i);
            assert!(row.windows(2).all(|w| w[0] < w[1]), "row {i} not sorted");
            for &j in row {
                assert_ne!(j as usize, i);
                assert!(net.has_edge(j as usize, i));
            }
        }
    }

    #[test]
    fn complete_and_empty() {
        let k5 = sample_network(&GraphonSpec::Constant { value: 1.0 }, 5, 1.0, 1).unwrap();
        assert_eq!(k5.degrees(), vec![4; 5]);
        check_structure(&k5);
        let empty = sample_network(&GraphonSpec::Constant { value: 0.0 }, 5, 1.0, 1).unwrap();
        assert_eq!(empty.degrees(), vec![0; 5]);
    }

    #[test]
    fn figure_one_graph() {
        let net = SampledNetwork::from_edges(vec![0.5; 5], &[(0, 1), (1, 2), (1, 3), (1, 4), (2, 3), (3, 4)]).unwrap();
        assert_eq!(net.degrees(), vec![1, 4, 2, 3, 2]);
        assert_eq!(net.neighbors(1), &[0, 2, 3, 4]);
        check_structure(&net);
        assert!(SampledNetwork::from_edges(vec![0.5; 2], &[(0, 0)]).is_err());
        assert!(SampledNetwork::from_edges(vec![0.5; 2], &[(0, 2)]).is_err());
    }

    #[test]
    fn preconditions() {
        let g = GraphonSpec::Constant { value: 0.4 };
        assert!(sample_network(&g, 1, 1.0, 0).is_err());
        assert!(sample_network(&g, 10, 0.0, 0).is_err());
        assert!(sample_network(&g, 10, 1.5, 0).is_err());
        let tight = SamplingOptions { max_expected_edges: 10.0 };
        assert!(matches!(sample_network_with(&g, 100, 1.0, 0, tight), Err(Error::Feasibility(_))));
    }

    #[test]
    fn mean_degree_of_constant_graphon() {
        let n = 10_000;
        let net = sample_network(&GraphonSpec::Constant { value: 0.4 }, n, 1.0, 5).unwrap();
        let mean = net.degrees().iter().map(|&d| d as f64).sum::<f64>() / n as f64;
        // total edges ~ Binomial(n(n-1)/2, 0.4)
        let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
        let se = 2.0 * (pairs * 0.4 * 0.6).sqrt() / n as f64;
        assert!((mean - 0.4 * (n as f64 - 1.0)).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn sparse_path_matches_expected_density() {
        let g = presets::lookup("appendix_a_1").unwrap().graphon;
        let n = 6000;
        let rho = (n as f64).powf(-0.4);
        assert!(n > DIRECT_MAX_N);
        let mut total = 0.0;
        let reps = 5;
        for s in 0..reps {
            let net = sample_network(&g, n, rho, 100 + s).unwrap();
            check_structure(&net);
            total += net.edge_count() as f64;
        }
        let want = expected_edges(&g, n, rho) * reps as f64;
        // edge counts vary through the types as well; allow a generous band
        assert!((total - want).abs() / want < 0.03, "{total} vs {want}");
    }

    #[test]
    fn same_seed_same_network() {
        let g = presets::lookup("appendix_a_7").unwrap().graphon;
        for &(n, rho) in &[(300, 1.0), (5000, 0.05)] {
            let a = sample_network(&g, n, rho, 9).unwrap();
            let b = sample_network(&g, n, rho, 9).unwrap();
            assert_eq!(a, b);
            let c = sample_network(&g, n, rho, 10).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn matvec_matches_dense() {
        let g = presets::lookup("appendix_a_2").unwrap().graphon;
        let net = sample_network(&g, 60, 1.0, 3).unwrap();
        let x: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y = vec![0.0; 60];
        net.matvec(&x, &mut y);
        let dense = net.to_dense();
        for i in 0..60 {
            let want: f64 = (0..60).map(|j| dense[i * 60 + j] * x[j]).sum();
            assert!((y[i] - want).abs() < 1e-12);
        }
        let mut block = vec![0.0; 120];
        let xb: Vec<f64> = x.iter().flat_map(|&v| [v, 2.0 * v]).collect();
        net.matmul_rows(&xb, 2, &mut block);
        for i in 0..60 {
            assert!((block[2 * i] - y[i]).abs() < 1e-12);
            assert!((block[2 * i + 1] - 2.0 * y[i]).abs() < 1e-12);
        }
    }
}
