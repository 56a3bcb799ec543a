//! Bowen-root brackets `lower_k <= t_u <= upper_k` as the block level grows.

use hypdim::cocycle::{MatrixCocycle, Orientation};
use hypdim::dimension::bracket_sequence;
use hypdim::symbolic::{Budget, SubshiftSpec};
use nalgebra::DMatrix;

fn main() -> hypdim::Result<()> {
    let spec = SubshiftSpec::full_shift(2);
    let c = MatrixCocycle::new(
        Orientation::Unstable,
        vec![
            DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]),
            DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 3.0]),
        ],
    )?;
    let rows = bracket_sequence(&spec, &c, 4, 1e-12, &Budget::default())?;
    println!("{:>3} {:>6} {:>12} {:>12} {:>10} {:>10}", "k", "n", "lower", "upper", "gap", "defect");
    for r in &rows {
        println!(
            "{:>3} {:>6} {:>12.8} {:>12.8} {:>10.6} {:>10.6}",
            r.k,
            r.block_len,
            r.lower.t,
            r.upper.t,
            r.gap(),
            r.defect
        );
    }
    Ok(())
}
