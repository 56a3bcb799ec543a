//! One pass/fail line per acceptance criterion; exits nonzero if any fails.

use hypdim::acceptance;

const SEED: u64 = 20_240_601;

fn main() {
    let outcomes = acceptance::run_all(SEED);
    for o in &outcomes {
        println!("{}", o.summary_line());
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
