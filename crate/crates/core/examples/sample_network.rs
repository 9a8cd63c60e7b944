//! Sample exposure graphs from two graphons and compare degrees with the expected count.

use spillover::graphon::{GraphonSpec, SparsityRule};
use spillover::network::{expected_edges, sample_network};
use spillover::presets;

fn main() -> spillover::Result<()> {
    let sbm = presets::lookup("appendix_a_1").expect("preset exists").graphon;
    let star = GraphonSpec::Star { eta: 0.05, a: 0.8 };
    let sparsity = SparsityRule::PowerLaw { exponent: 0.2 };

    for (label, spec) in [("three-block SBM", &sbm), ("star", &star)] {
        for n in [500, 2000, 8000] {
            let rho = sparsity.rho(n);
            let net = sample_network(spec, n, rho, 42)?;
            let degrees = net.degrees();
            let max = degrees.iter().max().copied().unwrap_or(0);
            let mean = degrees.iter().map(|&d| d as f64).sum::<f64>() / n as f64;
            println!(
                "{label:<16} n={n:<5} rho={rho:.3} edges={:<8} expected={:<10.0} mean degree={mean:.1} max={max}",
                net.edge_count(),
                expected_edges(spec, n, rho)
            );
        }
    }
    Ok(())
}
