//! Interference-robust intervals for a reported effect of 0.211 (se 0.099, n = 473), plus the star graphon's blow-up.

use spillover::sensitivity::{interval_curve, star_q2, Q2Rule, SensitivityInput};

fn main() -> spillover::Result<()> {
    let plain = SensitivityInput {
        n: 473,
        pi: 0.5,
        tau_hat: 0.211,
        se0: 0.099,
        sigma0_sq: 0.0,
        q2: Q2Rule::Zero,
    };
    let robust = SensitivityInput {
        q2: Q2Rule::CommunityInflation { inflation: 2.0 },
        ..plain.clone()
    };
    let p = robust.noise_polynomial();
    println!("null variance = {:.4} + {:.4}|t| + {:.4}t^2", p.constant, p.linear, p.quadratic);

    let alphas = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3];
    let a = interval_curve(&plain, &alphas)?;
    let b = interval_curve(&robust, &alphas)?;
    println!("{:>6} {:>18} {:>18}", "alpha", "no interference", "robust");
    for (x, y) in a.iter().zip(&b) {
        println!("{:>6} ({:.3}, {:.3})     ({:.3}, {:.3})", x.alpha, x.lo, x.hi, y.lo, y.hi);
    }

    println!("star graphon, unit effect: eta * E[Q^2]");
    for eta in [0.1, 0.01, 0.001] {
        println!("  eta={eta:<6} {:.4}", eta * star_q2(eta, 0.5, 1.0)?);
    }
    Ok(())
}
