//! Additive pressure of a potential and block pressure curves of a cocycle.

use hypdim::cocycle::{MatrixCocycle, Orientation};
use hypdim::pressure::{additive_pressure, BlockTable, EdgePotential, SingularKind};
use hypdim::symbolic::{Budget, SubshiftSpec};
use nalgebra::DMatrix;

fn main() -> hypdim::Result<()> {
    let spec = SubshiftSpec::golden_mean();
    for t in [0.0, 0.5, 1.0] {
        let pot = EdgePotential::from_symbol_values(&spec, &[-t * 3f64.ln(), -t * 5f64.ln()])?;
        println!("golden mean, phi = -t log(3|5), t = {t}: P = {:.10}", additive_pressure(&spec, &pot)?.value);
    }

    let full = SubshiftSpec::full_shift(2);
    let c = MatrixCocycle::new(
        Orientation::Unstable,
        vec![
            DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.0, 3.5]),
            DMatrix::from_row_slice(2, 2, &[3.2, 0.0, -0.4, 3.0]),
        ],
    )?;
    let budget = Budget::default();
    println!("{:>5} {:>4} {:>14} {:>14}", "t", "k", "norm", "conorm");
    for k in [0, 2, 4] {
        let table = BlockTable::build(&full, &c, k, &budget)?;
        for i in 0..=4 {
            let t = 0.5 * i as f64;
            let n = table.pressure(t, SingularKind::Norm)?.value;
            let m = table.pressure(t, SingularKind::Conorm)?.value;
            println!("{t:>5.2} {k:>4} {n:>14.8} {m:>14.8}");
        }
    }
    Ok(())
}
