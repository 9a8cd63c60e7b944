//! Exact expectations over all assignments on a tiny network: the unbiased estimators hit the estimands.

use spillover::estimands::{exhaustive_estimands, exhaustive_expectation};
use spillover::estimators::{ht_direct, unbiased_indirect, unbiased_total};
use spillover::network::sample_network;
use spillover::presets;

fn main() -> spillover::Result<()> {
    let preset = presets::lookup("figure2_constant").expect("preset exists");
    let model = preset.outcome.with_noise(0.0)?;
    let pi = preset.pi;
    let net = sample_network(&preset.graphon, 10, 1.0, 7)?;
    let truth = exhaustive_estimands(&net, &model, pi)?;

    let ht = exhaustive_expectation(&net, &model, pi, |r| ht_direct(&r.outcomes, &r.treatment, pi))?;
    let ind = exhaustive_expectation(&net, &model, pi, |r| {
        unbiased_indirect(&r.outcomes, &r.treated_neighbors, &r.degrees, pi)
    })?;
    let tot = exhaustive_expectation(&net, &model, pi, |r| {
        unbiased_total(&r.outcomes, &r.treatment, &r.treated_neighbors, &r.degrees, pi)
    })?;

    println!("{} edges among {} units", net.edge_count(), net.n());
    println!("direct   estimand {:+.12}  E[ht_dir]  {:+.12}", truth.tau_dir, ht);
    println!("indirect estimand {:+.12}  E[unb_ind] {:+.12}", truth.tau_ind, ind);
    println!("total    estimand {:+.12}  E[unb_tot] {:+.12}", truth.tau_tot, tot);
    Ok(())
}
