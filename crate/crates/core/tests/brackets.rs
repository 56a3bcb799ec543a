//! Bracket tables against closed forms that do not go through block tables.

use hypdim::cocycle::{MatrixCocycle, Orientation};
use hypdim::dimension::bracket_sequence;
use hypdim::symbolic::{Budget, SubshiftSpec};
use nalgebra::DMatrix;

/// `(1/n) log sum_a C(n,a) X(a)^{-t}` where a word with `a` copies of
/// diag(3,4) has singular values `3^a 4^(n-a)` and `4^a 3^(n-a)`.
fn diag_pair_pressure(n: u32, t: f64, conorm: bool) -> f64 {
    let (l3, l4) = (3f64.ln(), 4f64.ln());
    let terms: Vec<f64> = (0..=n)
        .map(|a| {
            let (a, b) = (a as f64, (n - a as u32) as f64);
            let x = a * l3 + b * l4;
            let y = a * l4 + b * l3;
            let log_binom = ln_binomial(n, a as u32);
            log_binom - t * if conorm { x.min(y) } else { x.max(y) }
        })
        .collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (top + terms.iter().map(|v| (v - top).exp()).sum::<f64>().ln()) / n as f64
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64).ln() - (i as f64).ln()).sum()
}

fn root(p: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 4.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn closed_gap(k: u32) -> (f64, f64) {
    let n = 1 << k;
    (root(|t| diag_pair_pressure(n, t, false)), root(|t| diag_pair_pressure(n, t, true)))
}

#[test]
fn diag_pair_brackets_match_binomial_closed_form() {
    let c = MatrixCocycle::new(
        Orientation::Unstable,
        vec![
            DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]),
            DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 3.0]),
        ],
    )
    .unwrap();
    let rows = bracket_sequence(&SubshiftSpec::full_shift(2), &c, 4, 1e-12, &Budget::default()).unwrap();
    for r in &rows {
        let (lo, hi) = closed_gap(r.k);
        assert!((r.lower.t - lo).abs() < 1e-9, "k={} lower {} vs {lo}", r.k, r.lower.t);
        assert!((r.upper.t - hi).abs() < 1e-9, "k={} upper {} vs {hi}", r.k, r.upper.t);
    }
}

#[test]
fn diag_pair_gap_shrinks_below_five_hundredths_by_level_two() {
    // the gap roughly halves per level; only k <= 1 exceeds 0.05
    let gaps: Vec<f64> = (0..=10).map(|k| {
        let (lo, hi) = closed_gap(k);
        hi - lo
    }).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]));
    assert!(gaps[1] > 0.05 && gaps[2] < 0.05);
    assert!((gaps[4] - 0.025621).abs() < 1e-6, "{}", gaps[4]);
    assert!(gaps[10] > 0.0);
}
