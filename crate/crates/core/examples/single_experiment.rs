//! One Bernoulli experiment on a sampled network and every estimator computed on it.

use spillover::estimands::population_estimands;
use spillover::estimators::{EstimationContext, EstimatorKind};
use spillover::experiment::run_experiment;
use spillover::network::sample_network;
use spillover::presets;
use spillover::rng::{stream_seed, Stream};
use spillover::spectral::{top_abs_eigs, EigenOptions};

fn main() -> spillover::Result<()> {
    let preset = presets::lookup("appendix_a_1").expect("preset exists");
    let n = 3000;
    let seed = 2024;
    let net = sample_network(&preset.graphon, n, 1.0, stream_seed(seed, Stream::Graph))?;
    let realization = run_experiment(
        &net,
        &preset.outcome,
        preset.pi,
        stream_seed(seed, Stream::Treatment),
        stream_seed(seed, Stream::Noise),
    )?;
    let eigen = top_abs_eigs(&net, preset.rank, &EigenOptions::default())?;
    let oracle = preset.graphon.true_eigensystem()?.evaluate_on(net.types(), preset.rank)?;
    let ctx = EstimationContext {
        realization: &realization,
        pi: preset.pi,
        pi_prime: preset.pi,
        eigen: Some(&eigen),
        oracle_components: Some(&oracle),
    };

    let truth = population_estimands(&preset.outcome, preset.pi)?;
    println!("population: dir={:.4} ind={:.4} tot={:.4}", truth.tau_dir, truth.tau_ind, truth.tau_tot);
    for kind in EstimatorKind::ALL {
        let rec = ctx.estimate(kind)?;
        println!("{:<14} {:>9.4}", kind.name(), rec.value);
    }
    Ok(())
}
