//! Box-counting estimate of the invariant set and its slices.

use hypdim::geometry::{
    auto_dyadic_scales, balanced_depths, box_count, box_count_auto, sample_product, sample_stable_slice,
    sample_unstable_slice, HorseshoeModel,
};
use hypdim::symbolic::{Budget, Word};

fn main() -> hypdim::Result<()> {
    let (mu, lambda) = (3.0f64, 0.2f64);
    let model = HorseshoeModel::linear(2, mu, lambda)?;
    let budget = Budget::default();
    let seed = Some(2024);

    let (nf, nb) = balanced_depths(&model, &budget)?;
    let cloud = sample_product(&model, nf, nb, seed, &budget)?;
    let fit = box_count_auto(&cloud)?;
    println!("invariant set: {} points, depths ({nf}, {nb})", cloud.len());
    for (d, n) in fit.scales.iter().zip(&fit.counts) {
        println!("  delta = {d:.3e}  N = {n}");
    }
    println!("  slope = {:.5} +- {:.5}, r^2 = {:.6}", fit.slope, fit.standard_error, fit.r_squared);

    let first = Word::new(model.coding(), vec![0])?;
    let u = sample_unstable_slice(&model, &first, 14, seed, &budget)?;
    let s = sample_stable_slice(&model, &first, 14, seed, &budget)?;
    let fu = box_count(&u, &auto_dyadic_scales(&u)?)?;
    let fs = box_count(&s, &auto_dyadic_scales(&s)?)?;
    println!("unstable slice slope {:.5} (log2/log mu = {:.5})", fu.slope, 2f64.ln() / mu.ln());
    println!("stable slice slope   {:.5} (-log2/log lambda = {:.5})", fs.slope, -2f64.ln() / lambda.ln());
    for w in fit.warnings.iter().chain(&fu.warnings).chain(&fs.warnings) {
        println!("warning: {w}");
    }
    Ok(())
}
