use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_probability, Error, Result};
use crate::estimators::EstimatorKind;
use crate::graphon::{GraphonSpec, SparsityRule};
use crate::network::{expected_edges, SamplingOptions};
use crate::outcomes::{OutcomeModel, OutcomeSpec};
use crate::presets;
use crate::spectral::EigenOptions;
use crate::theory::TheoryConfig;

/// Environment variable that overrides the configured worker count.
pub const WORKERS_ENV: &str = "SPILLOVER_WORKERS";

/// User-facing run description, read from JSON.
///
/// Either `preset` or both `graphon` and `outcome` must be given; explicit
/// fields override the preset's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub graphon: Option<GraphonSpec>,
    #[serde(default)]
    pub outcome: Option<OutcomeSpec>,
    #[serde(default)]
    pub pi: Option<f64>,
    /// Evaluation probability for `vhat`; defaults to `pi`.
    #[serde(default)]
    pub pi_prime: Option<f64>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    /// Network sizes; a plain simulation uses a single entry.
    pub n_grid: Vec<usize>,
    #[serde(default = "default_sparsity")]
    pub sparsity: SparsityRule,
    /// Number of balanced components; defaults to the preset's rank.
    #[serde(default)]
    pub rank: Option<usize>,
    /// Draw one network per grid point and reuse it across replicates.
    #[serde(default)]
    pub fixed_network: bool,
    #[serde(default)]
    pub eigen: EigenOptions,
    #[serde(default)]
    pub theory: TheoryConfig,
    /// Skip theory predictions in the metadata.
    #[serde(default)]
    pub skip_theory: bool,
    #[serde(default)]
    pub max_expected_edges: Option<f64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_estimators() -> Vec<EstimatorKind> {
    vec![EstimatorKind::HtDir, EstimatorKind::HajDir]
}

fn default_sparsity() -> SparsityRule {
    SparsityRule::Dense
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default = "default_results")]
    pub results: PathBuf,
    #[serde(default = "default_diagnostics")]
    pub diagnostics: PathBuf,
    #[serde(default = "default_metadata")]
    pub metadata: PathBuf,
    #[serde(default = "default_mse")]
    pub mse: PathBuf,
    #[serde(default = "default_slopes")]
    pub slopes: PathBuf,
}

fn default_results() -> PathBuf {
    "results.csv".into()
}
fn default_diagnostics() -> PathBuf {
    "diagnostics.csv".into()
}
fn default_metadata() -> PathBuf {
    "metadata.json".into()
}
fn default_mse() -> PathBuf {
    "mse.csv".into()
}
fn default_slopes() -> PathBuf {
    "slopes.csv".into()
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            results: default_results(),
            diagnostics: default_diagnostics(),
            metadata: default_metadata(),
            mse: default_mse(),
            slopes: default_slopes(),
        }
    }
}

impl OutputPaths {
    /// Resolve relative paths against `dir`.
    pub fn under(&self, dir: &Path) -> Self {
        let join = |p: &PathBuf| if p.is_absolute() { p.clone() } else { dir.join(p) };
        Self {
            results: join(&self.results),
            diagnostics: join(&self.diagnostics),
            metadata: join(&self.metadata),
            mse: join(&self.mse),
            slopes: join(&self.slopes),
        }
    }
}

/// Every field that can change an emitted number, with presets expanded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub graphon: GraphonSpec,
    pub outcome: OutcomeSpec,
    pub pi: f64,
    pub pi_prime: f64,
    pub estimators: Vec<EstimatorKind>,
    pub replicates: usize,
    pub seed: u64,
    pub n_grid: Vec<usize>,
    pub sparsity: SparsityRule,
    pub rank: usize,
    pub fixed_network: bool,
    pub eigen: EigenOptions,
    pub theory: Option<TheoryConfig>,
    pub max_expected_edges: f64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// A config for `preset` with the preset's defaults.
    pub fn for_preset(preset: &str, n_grid: Vec<usize>, replicates: usize, seed: u64) -> Self {
        Self {
            preset: Some(preset.to_string()),
            graphon: None,
            outcome: None,
            pi: None,
            pi_prime: None,
            estimators: default_estimators(),
            replicates,
            seed,
            n_grid,
            sparsity: SparsityRule::Dense,
            rank: None,
            fixed_network: false,
            eigen: EigenOptions::default(),
            theory: TheoryConfig::default(),
            skip_theory: false,
            max_expected_edges: None,
            workers: None,
            output: OutputPaths::default(),
        }
    }

    /// Expand presets and check every invariant without doing any sampling.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let preset = match &self.preset {
            Some(name) => Some(
                presets::lookup(name).ok_or_else(|| Error::Config(format!("unknown preset '{name}'")))?,
            ),
            None => None,
        };
        let graphon = match (&self.graphon, &preset) {
            (Some(g), _) => g.clone(),
            (None, Some(p)) => p.graphon.clone(),
            (None, None) => return Err(Error::Config("either a preset or a graphon is required".into())),
        };
        let outcome = match (&self.outcome, &preset) {
            (Some(o), _) => o.clone(),
            (None, Some(p)) => p.outcome.spec().clone(),
            (None, None) => return Err(Error::Config("either a preset or an outcome is required".into())),
        };
        let pi = self.pi.or(preset.as_ref().map(|p| p.pi)).unwrap_or(0.5);
        let pi_prime = self.pi_prime.unwrap_or(pi);
        let rank = self.rank.or(preset.as_ref().map(|p| p.rank)).unwrap_or(1);

        graphon.validate()?;
        OutcomeModel::new(outcome.clone())?;
        check_probability("pi", pi)?;
        check_probability("pi_prime", pi_prime)?;
        self.sparsity.validate()?;
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid must not be empty".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("estimator list must not be empty".into()));
        }
        if rank == 0 {
            return Err(Error::Config("rank must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let mut estimators = self.estimators.clone();
        estimators.sort();
        estimators.dedup();
        let mut n_grid = self.n_grid.clone();
        n_grid.sort_unstable();
        n_grid.dedup();

        let max_expected_edges = self
            .max_expected_edges
            .unwrap_or(SamplingOptions::default().max_expected_edges);
        let needs_eigen = estimators.iter().any(|k| k.needs_eigenvectors());
        for &n in &n_grid {
            if n < 2 {
                return Err(Error::Feasibility(format!("n = {n} is too small")));
            }
            let rho = self.sparsity.rho(n);
            let edges = expected_edges(&graphon, n, rho);
            if edges > max_expected_edges {
                return Err(Error::Feasibility(format!(
                    "n = {n} expects {edges:.3e} edges, above the cap {max_expected_edges:.3e}"
                )));
            }
            if needs_eigen && rank >= n {
                return Err(Error::Feasibility(format!("rank {rank} needs more than {n} nodes")));
            }
        }
        if estimators.contains(&EstimatorKind::OraclePcInd) && graphon.true_eigensystem()?.rank() < rank {
            return Err(Error::Unsupported(format!("the graphon has fewer than {rank} known eigenpairs")));
        }

        Ok(ResolvedConfig {
            graphon,
            outcome,
            pi,
            pi_prime,
            estimators,
            replicates: self.replicates,
            seed: self.seed,
            n_grid,
            sparsity: self.sparsity,
            rank,
            fixed_network: self.fixed_network,
            eigen: self.eigen,
            theory: (!self.skip_theory).then_some(self.theory),
            max_expected_edges,
        })
    }

    /// Configured workers, overridden by the environment variable when set.
    pub fn worker_count(&self) -> Result<usize> {
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            return v
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&w| w > 0)
                .ok_or_else(|| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'")));
        }
        Ok(self.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
    }
}

impl ResolvedConfig {
    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn model(&self) -> OutcomeModel {
        OutcomeModel::new(self.outcome.clone()).expect("validated during resolution")
    }

    pub fn sampling(&self) -> SamplingOptions {
        SamplingOptions {
            max_expected_edges: self.max_expected_edges,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        RunConfig::for_preset("figure2_constant", vec![100], 3, 7)
    }

    #[test]
    fn preset_expansion_and_fingerprint_is_semantic() {
        let a = base().resolve().unwrap();
        assert_eq!(a.pi, 0.7);
        let mut explicit = base();
        explicit.preset = None;
        explicit.graphon = Some(GraphonSpec::Constant { value: 0.4 });
        explicit.outcome = Some(presets::lookup("figure2_constant").unwrap().outcome.spec().clone());
        explicit.pi = Some(0.7);
        explicit.rank = Some(1);
        explicit.workers = Some(3);
        explicit.output.results = "elsewhere.csv".into();
        assert_eq!(a.fingerprint(), explicit.resolve().unwrap().fingerprint());

        let mut changed = base();
        changed.seed = 8;
        assert_ne!(a.fingerprint(), changed.resolve().unwrap().fingerprint());
        let mut changed = base();
        changed.replicates = 4;
        assert_ne!(a.fingerprint(), changed.resolve().unwrap().fingerprint());
    }

    #[test]
    fn invalid_configs() {
        let mut c = base();
        c.replicates = 0;
        assert!(matches!(c.resolve(), Err(Error::Config(_))));
        let mut c = base();
        c.n_grid.clear();
        assert!(c.resolve().is_err());
        let mut c = base();
        c.preset = Some("nope".into());
        assert!(c.resolve().is_err());
        let mut c = base();
        c.n_grid = vec![1_000_000];
        assert!(matches!(c.resolve(), Err(Error::Feasibility(_))));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "preset": "appendix_a_1",
            "estimators": ["pc_ind", "unb_ind"],
            "replicates": 5,
            "seed": 3,
            "n_grid": [200, 400],
            "sparsity": {"form": "power_law", "exponent": 0.2}
        }"#;
        let c = RunConfig::from_json(text).unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.rank, 3);
        assert_eq!(r.estimators, vec![EstimatorKind::UnbInd, EstimatorKind::PcInd]);
        assert!(RunConfig::from_json(r#"{"replicates": 1, "n_grid": [10], "typo": 1}"#).is_err());
    }
}
