//! Log-log MSE slopes of the indirect estimators on a sparse three-block SBM.

use spillover::estimators::EstimatorKind;
use spillover::graphon::SparsityRule;
use spillover::harness::{mse_sweep, RunConfig};

fn main() -> spillover::Result<()> {
    let mut cfg = RunConfig::for_preset("appendix_a_1", vec![500, 1000, 2000, 4000], 30, 99);
    cfg.estimators = vec![EstimatorKind::PcInd, EstimatorKind::UnbInd];
    cfg.sparsity = SparsityRule::PowerLaw { exponent: 0.4 };
    cfg.skip_theory = true;
    let sweep = mse_sweep(&cfg)?;
    for p in &sweep.points {
        println!("{:<8} n={:<5} rho={:.3} mse={:.5} bias={:+.4}", p.estimator, p.n, p.rho, p.mse, p.bias);
    }
    for s in &sweep.slopes {
        println!("{:<8} slope {:?}", s.estimator, s.slope);
    }
    Ok(())
}
