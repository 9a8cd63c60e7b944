//! Evaluate built-in and free-form outcome models and their spillover slopes.

use std::collections::BTreeMap;

use spillover::outcomes::{DerivativeMode, OutcomeForm, OutcomeModel};

fn main() -> spillover::Result<()> {
    let square = OutcomeModel::from_form(OutcomeForm::SquareMix, 0.2)?;
    let custom = OutcomeModel::from_form(
        OutcomeForm::Expression {
            expr: "base + lift * w + gain * x^2 * exp(u)".into(),
            params: BTreeMap::from([("base".into(), 1.0), ("lift".into(), 0.5), ("gain".into(), 2.0)]),
            derivative: DerivativeMode::Symbolic,
        },
        0.0,
    )?;

    println!("{:>5} {:>5} {:>5} | {:>10} {:>10} | {:>10} {:>10}", "w", "x", "u", "square", "d/dx", "custom", "d/dx");
    for (w, x, u) in [(false, 0.0, 0.2), (true, 0.3, 0.5), (true, 0.9, 0.9), (false, 0.6, 0.1)] {
        println!(
            "{:>5} {x:>5} {u:>5} | {:>10.4} {:>10.4} | {:>10.4} {:>10.4}",
            w as u8,
            square.mean(w, x, u)?,
            square.partial_x(w, x, u)?,
            custom.mean(w, x, u)?,
            custom.partial_x(w, x, u)?,
        );
    }
    println!("finite-difference check: {:.6}", custom.finite_difference_x(true, 0.9, 0.9));
    Ok(())
}
