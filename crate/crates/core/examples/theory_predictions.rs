//! Limiting variances of the direct and indirect estimators for a few presets.

use spillover::presets;
use spillover::theory::{
    direct_clt, indirect_clt, unbiased_variance_scale, Centering, DirectEstimator, TheoryConfig,
};

fn main() -> spillover::Result<()> {
    let cfg = TheoryConfig::default();
    for name in ["figure2_constant", "appendix_a_1", "appendix_a_7"] {
        let p = presets::lookup(name).expect("preset exists");
        let d = direct_clt(&p.graphon, &p.outcome, p.pi, &cfg)?;
        println!("{name}");
        println!(
            "  direct   ht {:.4} (naive {:.4})  hajek {:.4} (naive {:.4})  E[Q^2] {:.4}",
            d.variance(DirectEstimator::Ht, Centering::Population),
            d.naive_variance(DirectEstimator::Ht, Centering::Population),
            d.variance(DirectEstimator::Hajek, Centering::Population),
            d.naive_variance(DirectEstimator::Hajek, Centering::Population),
            d.e_q2.value
        );
        let u = unbiased_variance_scale(&p.graphon, &p.outcome, p.pi, &cfg)?;
        println!("  unbiased indirect variance ~ n rho^2 * {:.4}", u.nu.value);
        match indirect_clt(&p.graphon, &p.outcome, p.pi, p.rank, &cfg) {
            Ok(i) => println!("  pc indirect variance ~ rho * {:.4} (+/- {:.4})", i.sigma2_ind.value, i.sigma2_ind.se),
            Err(e) => println!("  pc indirect: {e}"),
        }
    }
    Ok(())
}
