//! Topological entropy of a few codings, and the entropy of Markov measures on them.

use hypdim::pressure::{gibbs_measure, EdgePotential};
use hypdim::symbolic::{markov_entropy, topological_entropy, MarkovMeasure, SubshiftSpec};

fn main() -> hypdim::Result<()> {
    let codings = [
        ("full 2-shift", SubshiftSpec::full_shift(2)),
        ("full 3-shift", SubshiftSpec::full_shift(3)),
        ("golden mean", SubshiftSpec::golden_mean()),
    ];
    for (name, spec) in &codings {
        println!("{name:>12}: h_top = {:.10}", topological_entropy(spec)?);
        for n in [1, 4, 8, 16] {
            let count = spec.word_count(n);
            println!("{:>14}n = {n:<2} words = {count:>6}  log(words)/n = {:.6}", "", (count as f64).ln() / n as f64);
        }
    }

    let coin = MarkovMeasure::bernoulli(&SubshiftSpec::full_shift(2), &[0.5, 0.5])?;
    println!("fair coin: h = {:.10}", markov_entropy(&coin));
    // zero potential: the Gibbs measure is the measure of maximal entropy
    let golden = SubshiftSpec::golden_mean();
    let parry = gibbs_measure(&golden, &EdgePotential::constant(&golden, 0.0)?)?;
    println!("Parry measure on the golden mean: h = {:.10}", markov_entropy(&parry));
    Ok(())
}
