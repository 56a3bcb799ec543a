//! Holder exponent of the conjugacy between two horseshoes sharing a coding.

use hypdim::geometry::{holder_exponent_fit, HorseshoeModel};

fn main() -> hypdim::Result<()> {
    let a = HorseshoeModel::linear(2, 3.0, 0.2)?;
    for mu in [3.0, 4.0, 6.0] {
        let b = HorseshoeModel::linear(2, mu, 0.2)?;
        let fit = holder_exponent_fit(&a, &b, 20, 2000, 7)?;
        let s = 3f64.ln() / mu.ln();
        println!(
            "mu_b = {mu}: slope = {:.6}  r_lower = {:.6}  (log3/log mu_b = {s:.6}), r^2 = {:.6}",
            fit.slope, fit.r_lower, fit.fit_quality
        );
    }
    Ok(())
}
