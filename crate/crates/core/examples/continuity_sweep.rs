//! Dimension along a one-parameter family of linear horseshoes.

use hypdim::dimension::{continuity_sweep, parameter_grid, DimensionOptions, ModelData};
use hypdim::geometry::HorseshoeModel;

fn main() -> hypdim::Result<()> {
    let family = |mu: f64| -> hypdim::Result<ModelData> {
        let m = HorseshoeModel::linear(2, mu, 0.2)?;
        Ok(ModelData {
            spec: m.coding().clone(),
            unstable: m.unstable_cocycle()?,
            stable: m.stable_cocycle()?,
        })
    };
    let grid = parameter_grid(3.0, 5.0, 0.05)?;
    let sweep = continuity_sweep(family, &grid, &DimensionOptions::default());
    for p in sweep.points.iter().step_by(5) {
        match p.dim_total {
            Some(d) => println!("mu = {:.2}  dim = {d:.10}  certified = {}", p.parameter, p.certified),
            None => println!("mu = {:.2}  failed: {}", p.parameter, p.error.as_deref().unwrap_or("?")),
        }
    }
    println!(
        "{} points, largest adjacent jump {:.6}, decreasing = {}",
        sweep.points.len(),
        sweep.max_adjacent_jump,
        sweep.monotone_decreasing
    );
    Ok(())
}
