//! Leading adjacency eigenvectors and the PC-balanced indirect estimate with its balance diagnostics.

use spillover::estimators::{oracle_pc_indirect, pc_balancing_indirect_with, unbiased_indirect};
use spillover::experiment::run_experiment;
use spillover::graphon::SparsityRule;
use spillover::network::sample_network;
use spillover::presets;
use spillover::spectral::{dense_eigs, max_principal_angle, top_abs_eigs, EigenOptions};

fn main() -> spillover::Result<()> {
    let preset = presets::lookup("appendix_a_1").expect("preset exists");
    let n = 5000;
    let rho = SparsityRule::PowerLaw { exponent: 0.2 }.rho(n);
    let net = sample_network(&preset.graphon, n, rho, 3)?;
    let eig = top_abs_eigs(&net, preset.rank, &EigenOptions::default())?;
    println!("eigenvalues {:?} after {} iterations", eig.values, eig.iterations);
    println!("residual norms {:?}", eig.residual_norms);

    let r = run_experiment(&net, &preset.outcome, preset.pi, 11, 12)?;
    let (estimate, diag) = pc_balancing_indirect_with(&r.outcomes, &r.treated_neighbors, &r.degrees, preset.pi, &eig)?;
    let psi = preset.graphon.true_eigensystem()?.evaluate_on(net.types(), preset.rank)?;
    let (oracle, _) = oracle_pc_indirect(&r.outcomes, &r.treated_neighbors, &r.degrees, preset.pi, &psi)?;
    let unbiased = unbiased_indirect(&r.outcomes, &r.treated_neighbors, &r.degrees, preset.pi)?;
    println!("pc_ind {estimate:.4}  oracle {oracle:.4}  unbiased {unbiased:.4}");
    println!("beta {:?}", diag.beta);
    println!("balance residuals {:?}", diag.residuals);

    let small = sample_network(&preset.graphon, 300, 1.0, 5)?;
    let iterative = top_abs_eigs(
        &small,
        3,
        &EigenOptions {
            method: spillover::spectral::EigenMethod::Iterative,
            ..EigenOptions::default()
        },
    )?;
    let dense = dense_eigs(&small, 3);
    println!(
        "n=300: iterative vs dense largest principal angle {:.2e}",
        max_principal_angle(&iterative.vectors, &dense.vectors)
    );
    Ok(())
}
