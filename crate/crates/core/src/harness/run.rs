use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ResolvedConfig, RunConfig};
use crate::error::{Error, Result};
use crate::estimands::{population_estimands, EstimandSet};
use crate::estimators::{EstimationContext, EstimatorKind};
use crate::experiment::{run_experiment, ExperimentRealization};
use crate::graphon::Eigensystem;
use crate::network::{sample_network_with, SampledNetwork};
use crate::rng::{derive, stream_seed, Stream};
use crate::spectral::{top_abs_eigs, EigenOptions, EigenResult};
use crate::theory::{
    direct_clt, indirect_clt, unbiased_variance_scale, Centering, DirectCltPrediction, DirectEstimator,
    IndirectCltPrediction, UnbiasedVarianceScale,
};

/// One estimate: `replicate,estimator,estimate,n,rho,seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub replicate: usize,
    pub estimator: String,
    pub estimate: f64,
    pub n: usize,
    pub rho: f64,
    /// Replicate seed every stream of this replicate was derived from.
    pub seed: u64,
}

/// One balanced component of one PC estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub replicate: usize,
    pub estimator: String,
    pub n: usize,
    pub component: usize,
    pub eigenvalue: f64,
    pub beta: f64,
    pub residual: f64,
}

/// Gaussian overlay for a histogram: the limiting law and the interference-blind one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub estimator: String,
    pub mean: f64,
    pub sd: f64,
    pub naive_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub n: usize,
    pub rho: f64,
    pub overlays: Vec<Overlay>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryPredictions {
    pub direct: Option<DirectCltPrediction>,
    pub indirect: Option<IndirectCltPrediction>,
    pub unbiased: Option<UnbiasedVarianceScale>,
    /// Predictions that could not be computed, with the reason.
    pub unavailable: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub fingerprint: String,
    pub config: ResolvedConfig,
    pub estimands: EstimandSet,
    pub theory: Option<TheoryPredictions>,
    pub grid: Vec<GridMetadata>,
    /// Names of estimators supplied in code rather than by the config.
    pub custom_estimators: Vec<String>,
}

impl RunMetadata {
    pub fn overlay(&self, estimator: &str, n: usize) -> Option<&Overlay> {
        self.grid
            .iter()
            .find(|g| g.n == n)?
            .overlays
            .iter()
            .find(|o| o.estimator == estimator)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub diagnostics: Vec<DiagnosticRow>,
    pub metadata: RunMetadata,
}

impl ResultTable {
    pub fn estimates(&self, estimator: &str, n: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.estimator == estimator && r.n == n)
            .map(|r| r.estimate)
            .collect()
    }
}

/// Everything available to an estimator on one replicate.
pub struct ReplicateContext<'a> {
    pub grid_index: usize,
    pub replicate: usize,
    pub n: usize,
    pub rho: f64,
    pub pi: f64,
    pub network: &'a SampledNetwork,
    pub realization: &'a ExperimentRealization,
    pub estimands: &'a EstimandSet,
    pub eigen: Option<&'a EigenResult>,
}

/// An estimator supplied in code, run alongside the configured ones.
pub trait ReplicateEstimator: Sync {
    fn name(&self) -> &str;
    fn estimate(&self, ctx: &ReplicateContext<'_>) -> Result<f64>;
}

pub fn run_replications(config: &RunConfig) -> Result<ResultTable> {
    run_replications_with(config, &[])
}

pub fn run_replications_with(config: &RunConfig, custom: &[&dyn ReplicateEstimator]) -> Result<ResultTable> {
    let resolved = config.resolve()?;
    let builtin: Vec<&str> = resolved.estimators.iter().map(|k| k.name()).collect();
    for (i, c) in custom.iter().enumerate() {
        if builtin.contains(&c.name()) || custom[..i].iter().any(|d| d.name() == c.name()) {
            return Err(Error::Config(format!("duplicate estimator name '{}'", c.name())));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count()?)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| execute(&resolved, custom))
}

fn execute(cfg: &ResolvedConfig, custom: &[&dyn ReplicateEstimator]) -> Result<ResultTable> {
    let model = cfg.model();
    let estimands = population_estimands(&model, cfg.pi)?;
    let theory = cfg.theory.map(|t| predictions(cfg, &t));
    let oracle = if cfg.estimators.contains(&EstimatorKind::OraclePcInd) {
        Some(cfg.graphon.true_eigensystem()?)
    } else {
        None
    };
    let needs_eigen = cfg.estimators.iter().any(|k| k.needs_eigenvectors());

    let mut rows = Vec::with_capacity(cfg.n_grid.len() * cfg.replicates * (cfg.estimators.len() + custom.len()));
    let mut diagnostics = Vec::new();
    let mut grid = Vec::with_capacity(cfg.n_grid.len());
    for (g, &n) in cfg.n_grid.iter().enumerate() {
        let rho = cfg.sparsity.rho(n);
        let shared = if cfg.fixed_network {
            let point_seed = derive(cfg.seed, &[g as u64]);
            let net = sample_network_with(&cfg.graphon, n, rho, stream_seed(point_seed, Stream::Graph), cfg.sampling())?;
            let eigen = if needs_eigen {
                Some(top_abs_eigs(&net, cfg.rank, &solver_options(&cfg.eigen, point_seed))?)
            } else {
                None
            };
            Some((net, eigen))
        } else {
            None
        };
        let point = GridPoint {
            cfg,
            grid_index: g,
            n,
            rho,
            estimands: &estimands,
            oracle: oracle.as_ref(),
            needs_eigen,
            shared: shared.as_ref(),
            custom,
        };
        let outputs: Vec<(Vec<ResultRow>, Vec<DiagnosticRow>)> =
            (0..cfg.replicates).into_par_iter().map(|r| point.replicate(r)).collect::<Result<_>>()?;
        for (r, d) in outputs {
            rows.extend(r);
            diagnostics.extend(d);
        }
        grid.push(GridMetadata {
            n,
            rho,
            overlays: theory.as_ref().map(|t| overlays(cfg, t, &estimands, n, rho)).unwrap_or_default(),
        });
    }
    rows.sort_by(|a, b| (a.n, a.replicate, &a.estimator).cmp(&(b.n, b.replicate, &b.estimator)));
    diagnostics.sort_by(|a, b| {
        (a.n, a.replicate, &a.estimator, a.component).cmp(&(b.n, b.replicate, &b.estimator, b.component))
    });
    Ok(ResultTable {
        rows,
        diagnostics,
        metadata: RunMetadata {
            fingerprint: cfg.fingerprint(),
            config: cfg.clone(),
            estimands,
            theory,
            grid,
            custom_estimators: custom.iter().map(|c| c.name().to_string()).collect(),
        },
    })
}

fn solver_options(base: &EigenOptions, seed: u64) -> EigenOptions {
    EigenOptions {
        seed: stream_seed(seed, Stream::Solver),
        ..*base
    }
}

struct GridPoint<'a> {
    cfg: &'a ResolvedConfig,
    grid_index: usize,
    n: usize,
    rho: f64,
    estimands: &'a EstimandSet,
    oracle: Option<&'a Eigensystem>,
    needs_eigen: bool,
    shared: Option<&'a (SampledNetwork, Option<EigenResult>)>,
    custom: &'a [&'a dyn ReplicateEstimator],
}

impl GridPoint<'_> {
    fn replicate(&self, r: usize) -> Result<(Vec<ResultRow>, Vec<DiagnosticRow>)> {
        let cfg = self.cfg;
        let seed = derive(cfg.seed, &[self.grid_index as u64, r as u64]);
        let owned;
        let (net, eigen) = match self.shared {
            Some((net, eigen)) => (net, eigen.as_ref()),
            None => {
                let net = sample_network_with(&cfg.graphon, self.n, self.rho, stream_seed(seed, Stream::Graph), cfg.sampling())?;
                let eigen = if self.needs_eigen {
                    Some(top_abs_eigs(&net, cfg.rank, &solver_options(&cfg.eigen, seed))?)
                } else {
                    None
                };
                owned = (net, eigen);
                (&owned.0, owned.1.as_ref())
            }
        };
        let model = cfg.model();
        let realization = run_experiment(
            net,
            &model,
            cfg.pi,
            stream_seed(seed, Stream::Treatment),
            stream_seed(seed, Stream::Noise),
        )?;
        let oracle_components = match self.oracle {
            Some(sys) => Some(sys.evaluate_on(net.types(), cfg.rank)?),
            None => None,
        };
        let ctx = EstimationContext {
            realization: &realization,
            pi: cfg.pi,
            pi_prime: cfg.pi_prime,
            eigen,
            oracle_components: oracle_components.as_deref(),
        };

        let row = |estimator: &str, estimate: f64| ResultRow {
            replicate: r,
            estimator: estimator.to_string(),
            estimate,
            n: self.n,
            rho: self.rho,
            seed,
        };
        let mut rows = Vec::with_capacity(cfg.estimators.len() + self.custom.len());
        let mut diagnostics = Vec::new();
        for &kind in &cfg.estimators {
            let rec = ctx.estimate(kind)?;
            rows.push(row(kind.name(), rec.value));
            if let Some(d) = rec.diagnostics {
                for k in 0..d.rank {
                    diagnostics.push(DiagnosticRow {
                        replicate: r,
                        estimator: kind.name().to_string(),
                        n: self.n,
                        component: k,
                        eigenvalue: d.eigenvalues[k],
                        beta: d.beta[k],
                        residual: d.residuals[k],
                    });
                }
            }
        }
        let custom_ctx = ReplicateContext {
            grid_index: self.grid_index,
            replicate: r,
            n: self.n,
            rho: self.rho,
            pi: cfg.pi,
            network: net,
            realization: &realization,
            estimands: self.estimands,
            eigen,
        };
        for c in self.custom {
            rows.push(row(c.name(), c.estimate(&custom_ctx)?));
        }
        Ok((rows, diagnostics))
    }
}

fn predictions(cfg: &ResolvedConfig, theory: &crate::theory::TheoryConfig) -> TheoryPredictions {
    let model = cfg.model();
    let has = |kinds: &[EstimatorKind]| kinds.iter().any(|k| cfg.estimators.contains(k));
    let mut unavailable = Vec::new();
    let direct = if has(&[EstimatorKind::HtDir, EstimatorKind::HajDir]) {
        keep(&mut unavailable, "direct", direct_clt(&cfg.graphon, &model, cfg.pi, theory))
    } else {
        None
    };
    let indirect = if has(&[EstimatorKind::PcInd]) {
        keep(&mut unavailable, "indirect", indirect_clt(&cfg.graphon, &model, cfg.pi, cfg.rank, theory))
    } else {
        None
    };
    let unbiased = if has(&[EstimatorKind::UnbInd]) {
        keep(&mut unavailable, "unbiased", unbiased_variance_scale(&cfg.graphon, &model, cfg.pi, theory))
    } else {
        None
    };
    TheoryPredictions {
        direct,
        indirect,
        unbiased,
        unavailable,
    }
}

fn keep<T>(unavailable: &mut Vec<String>, label: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            unavailable.push(format!("{label}: {e}"));
            None
        }
    }
}

/// Limiting Gaussian laws of the estimates at one grid point.
fn overlays(cfg: &ResolvedConfig, t: &TheoryPredictions, estimands: &EstimandSet, n: usize, rho: f64) -> Vec<Overlay> {
    let nf = n as f64;
    let mut out = Vec::new();
    for &kind in &cfg.estimators {
        let overlay = match kind {
            EstimatorKind::HtDir | EstimatorKind::HajDir => t.direct.as_ref().map(|d| {
                let est = if kind == EstimatorKind::HtDir {
                    DirectEstimator::Ht
                } else {
                    DirectEstimator::Hajek
                };
                let (full, naive) = if cfg.fixed_network {
                    (d.variance(est, Centering::Sample), d.naive_variance(est, Centering::Sample))
                } else {
                    (d.variance(est, Centering::Population), d.naive_variance(est, Centering::Population))
                };
                (estimands.tau_dir, (full / nf).sqrt(), Some((naive / nf).sqrt()))
            }),
            EstimatorKind::PcInd => t
                .indirect
                .as_ref()
                .map(|p| (estimands.tau_ind, (rho * p.sigma2_ind.value).sqrt(), None)),
            EstimatorKind::UnbInd => t
                .unbiased
                .as_ref()
                .map(|u| (estimands.tau_ind, (nf * rho * rho * u.nu.value).sqrt(), None)),
            _ => None,
        };
        if let Some((mean, sd, naive_sd)) = overlay {
            out.push(Overlay {
                estimator: kind.name().to_string(),
                mean,
                sd,
                naive_sd,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut c = RunConfig::for_preset("figure2_constant", vec![60], 4, 11);
        c.estimators = vec![EstimatorKind::HtDir, EstimatorKind::HajDir, EstimatorKind::UnbInd];
        c.theory.outer = 200;
        c
    }

    #[test]
    fn deterministic_and_sorted() {
        let a = run_replications(&small()).unwrap();
        let b = run_replications(&small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 4 * 3);
        let keys: Vec<_> = a.rows.iter().map(|r| (r.n, r.replicate, r.estimator.clone())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(a.metadata.overlay("ht_dir", 60).is_some());
    }

    #[test]
    fn worker_count_does_not_change_numbers() {
        let mut one = small();
        one.workers = Some(1);
        let mut three = small();
        three.workers = Some(3);
        assert_eq!(run_replications(&one).unwrap().rows, run_replications(&three).unwrap().rows);
    }

    #[test]
    fn fixed_network_reuses_the_graph() {
        struct Edges;
        impl ReplicateEstimator for Edges {
            fn name(&self) -> &str {
                "edges"
            }
            fn estimate(&self, ctx: &ReplicateContext<'_>) -> Result<f64> {
                Ok(ctx.network.edge_count() as f64)
            }
        }
        let mut c = small();
        c.fixed_network = true;
        let t = run_replications_with(&c, &[&Edges]).unwrap();
        let counts = t.estimates("edges", 60);
        assert!(counts.iter().all(|&e| e == counts[0]));
        let free = run_replications_with(&small(), &[&Edges]).unwrap();
        let counts = free.estimates("edges", 60);
        assert!(counts.iter().any(|&e| e != counts[0]));
        assert!(run_replications_with(&small(), &[&Edges, &Edges]).is_err());
    }
}
