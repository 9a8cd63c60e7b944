use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::run::{run_replications_with, ReplicateEstimator, ResultTable};
use crate::error::Result;

/// Error summary of one estimator at one grid point: `estimator,n,rho,target,mse,bias,variance,replicates`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsePoint {
    pub estimator: String,
    pub n: usize,
    pub rho: f64,
    pub target: f64,
    pub mse: f64,
    pub bias: f64,
    pub variance: f64,
    pub replicates: usize,
}

/// Least-squares fit of `log mse = intercept + slope * log n`: `estimator,slope,intercept,points`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub estimator: String,
    /// `None` when some grid point has zero MSE or fewer than two points exist.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub table: ResultTable,
    pub points: Vec<MsePoint>,
    pub slopes: Vec<SlopeFit>,
}

/// Which population estimand an estimator targets.
pub fn target_for(estimator: &str, table: &ResultTable) -> f64 {
    let e = &table.metadata.estimands;
    match estimator {
        "ht_dir" | "haj_dir" => e.tau_dir,
        "unb_tot" | "pc_tot" => e.tau_tot,
        _ => e.tau_ind,
    }
}

pub fn mse_sweep(config: &RunConfig) -> Result<SweepResult> {
    mse_sweep_with(config, &[])
}

pub fn mse_sweep_with(config: &RunConfig, custom: &[&dyn ReplicateEstimator]) -> Result<SweepResult> {
    let table = run_replications_with(config, custom)?;
    let (points, slopes) = summarize(&table);
    Ok(SweepResult { table, points, slopes })
}

/// MSE per (estimator, n) and the fitted log-log slope per estimator.
pub fn summarize(table: &ResultTable) -> (Vec<MsePoint>, Vec<SlopeFit>) {
    let mut names: Vec<&str> = table.rows.iter().map(|r| r.estimator.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    let mut points = Vec::new();
    let mut slopes = Vec::new();
    for name in names {
        let target = target_for(name, table);
        let mut mine = Vec::new();
        for g in &table.metadata.grid {
            let xs = table.estimates(name, g.n);
            if xs.is_empty() {
                continue;
            }
            let k = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / k;
            let mse = xs.iter().map(|x| (x - target).powi(2)).sum::<f64>() / k;
            let variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k;
            mine.push(MsePoint {
                estimator: name.to_string(),
                n: g.n,
                rho: g.rho,
                target,
                mse,
                bias: mean - target,
                variance,
                replicates: xs.len(),
            });
        }
        let fit = if mine.len() >= 2 && mine.iter().all(|p| p.mse > 0.0) {
            let xs: Vec<f64> = mine.iter().map(|p| (p.n as f64).ln()).collect();
            let ys: Vec<f64> = mine.iter().map(|p| p.mse.ln()).collect();
            Some(ols(&xs, &ys))
        } else {
            None
        };
        slopes.push(SlopeFit {
            estimator: name.to_string(),
            slope: fit.map(|f| f.0),
            intercept: fit.map(|f| f.1),
            points: mine.len(),
        });
        points.extend(mine);
    }
    (points, slopes)
}

/// `(slope, intercept)` of the least-squares line through `(xs, ys)`.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorKind;
    use crate::harness::run::ReplicateContext;

    struct Truth;
    impl ReplicateEstimator for Truth {
        fn name(&self) -> &str {
            "truth_ind"
        }
        fn estimate(&self, ctx: &ReplicateContext<'_>) -> Result<f64> {
            Ok(ctx.estimands.tau_ind)
        }
    }

    #[test]
    fn ols_recovers_a_line() {
        let xs = [0.0, 1.0, 2.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.4 * x).collect();
        let (s, i) = ols(&xs, &ys);
        assert!((s + 0.4).abs() < 1e-12 && (i - 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_estimator_has_zero_mse() {
        let mut c = RunConfig::for_preset("appendix_a_1", vec![50, 80], 3, 2);
        c.estimators = vec![EstimatorKind::UnbInd];
        c.skip_theory = true;
        let sweep = mse_sweep_with(&c, &[&Truth]).unwrap();
        let truth: Vec<_> = sweep.points.iter().filter(|p| p.estimator == "truth_ind").collect();
        assert_eq!(truth.len(), 2);
        assert!(truth.iter().all(|p| p.mse == 0.0));
        let fit = sweep.slopes.iter().find(|s| s.estimator == "truth_ind").unwrap();
        assert_eq!(fit.slope, None);
        let unb = sweep.slopes.iter().find(|s| s.estimator == "unb_ind").unwrap();
        assert!(unb.slope.is_some());
    }
}
