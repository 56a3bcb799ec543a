//! Conformality defect and Lyapunov bounds of a conformal and a non-conformal cocycle.

use hypdim::cocycle::{conformality_defect, lyapunov_bounds, product_stats, MatrixCocycle, Orientation};
use hypdim::symbolic::{Budget, SubshiftSpec, Word};
use nalgebra::DMatrix;

fn main() -> hypdim::Result<()> {
    let spec = SubshiftSpec::full_shift(2);
    let budget = Budget::default();
    let rot = |theta: f64, s: f64| {
        DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]) * s
    };
    let conformal = MatrixCocycle::new(Orientation::Unstable, vec![rot(0.3, 3.0), rot(1.1, 3.0)])?;
    let skewed = MatrixCocycle::new(
        Orientation::Unstable,
        vec![
            DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]),
            DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 3.0]),
        ],
    )?;

    for (name, c) in [("rotation-scalings", &conformal), ("diag(3,4)/diag(4,3)", &skewed)] {
        println!("{name}");
        for n in [1, 2, 4, 8, 16] {
            let d = conformality_defect(c, &spec, n, &budget)?;
            let (lo, hi) = lyapunov_bounds(c, &spec, n, &budget)?;
            println!("  n = {n:>2}  defect = {d:.6}  n*defect = {:.4}  lyapunov in [{lo:.6}, {hi:.6}]", n as f64 * d);
        }
    }

    let w = Word::new(&spec, vec![0, 1, 1, 0, 1])?;
    let s = product_stats(&skewed, &w)?;
    println!(
        "word {w:?}: log||A|| = {:.6}, log m(A) = {:.6}, log|det A| = {:.6}",
        s.log_norm, s.log_conorm, s.log_abs_det
    );
    Ok(())
}
