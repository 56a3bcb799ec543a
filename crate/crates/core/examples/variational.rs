//! Variational principle: search over Markov measures against the pressure.

use hypdim::cocycle::{MatrixCocycle, Orientation};
use hypdim::pressure::{gibbs_measure, variational_gap, EdgePotential, PotentialSpec, SingularKind, VariationalOptions};
use hypdim::symbolic::{markov_entropy, Budget, SubshiftSpec};
use nalgebra::DMatrix;

fn main() -> hypdim::Result<()> {
    let spec = SubshiftSpec::full_shift(2);
    let budget = Budget::default();
    let options = VariationalOptions::default();

    let pot = EdgePotential::from_symbol_values(&spec, &[-(3f64.ln()), -(5f64.ln())])?;
    let r = variational_gap(&spec, &PotentialSpec::Edge(pot.clone()), 1, 1, &options, &budget)?;
    println!("additive: sup = {:.12}  P = {:.12}  gap = {:.2e}", r.best_value, r.pressure_ref, r.gap);
    let g = gibbs_measure(&spec, &pot)?;
    println!("  Gibbs measure {:?}, entropy {:.10}", g.stationary().as_slice(), markov_entropy(&g));

    let c = MatrixCocycle::new(
        Orientation::Unstable,
        vec![
            DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]),
            DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 3.0]),
        ],
    )?;
    for memory in [1, 2, 3] {
        let phi = PotentialSpec::dimension(&c, SingularKind::Conorm, 0.6)?;
        let r = variational_gap(&spec, &phi, memory, 8, &options, &budget)?;
        println!(
            "conorm, t = 0.6, memory {memory}: sup = {:.8}  P_8 = {:.8}  gap = {:.2e}",
            r.best_value, r.pressure_ref, r.gap
        );
    }
    Ok(())
}
