//! Full dimension report for a linear horseshoe, compared with the closed form.

use hypdim::dimension::{dimension_report, DimensionOptions};
use hypdim::geometry::HorseshoeModel;

fn main() -> hypdim::Result<()> {
    let (mu, lambda) = (3.0f64, 0.2f64);
    let model = HorseshoeModel::linear(2, mu, lambda)?;
    let report = dimension_report(
        model.coding(),
        &model.unstable_cocycle()?,
        &model.stable_cocycle()?,
        &DimensionOptions::default(),
    )?;
    let closed = 2f64.ln() / mu.ln() - 2f64.ln() / lambda.ln();
    println!("t_u       = {:.12}  ({})", report.t_u.t, report.t_u.provenance);
    println!("t_s       = {:.12}  ({})", report.t_s.t, report.t_s.provenance);
    println!("dim       = {:.12}", report.dim_total);
    println!("closed    = {closed:.12}");
    println!("certified = {}  k_max = {}", report.certified, report.k_max);
    for f in &report.flags {
        println!("flag: {f}");
    }
    Ok(())
}
