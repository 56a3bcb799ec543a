//! Small dense numerics shared by the symbolic and pressure layers:
//! Perron roots of nonnegative matrices, stationary vectors, log-sum-exp.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MODULE: &str = "linalg";

/// Relative tolerance on the Perron root.
pub const PERRON_RTOL: f64 = 1e-12;
/// Power steps before switching to inverse iteration.
pub const PERRON_POWER_ITERS: usize = 100_000;
/// Inverse iteration cap.
pub const PERRON_INVERSE_ITERS: usize = 100;

/// Streaming `log(sum(exp(x_i)))` that never overflows.
///
/// The accumulation order is the insertion order, so feeding terms in a
/// fixed order gives bit-identical results.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

#[cfg(test)]
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut acc = LogSumExp::new();
    for x in terms {
        acc.push(x);
    }
    acc.value()
}

/// Strongly connected components of the digraph `i -> j` iff `adj(i, j)`.
/// Components come out in increasing order of their smallest vertex.
pub fn strongly_connected_components(n: usize, adj: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    // reachability closure; n is tiny (alphabet size) so O(n^3) is fine
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
        let mut stack = vec![i];
        while let Some(u) = stack.pop() {
            for (v, seen) in row.iter_mut().enumerate() {
                if adj(u, v) && !*seen {
                    *seen = true;
                    stack.push(v);
                }
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &comp {
            assigned[j] = true;
        }
        out.push(comp);
    }
    out
}

/// Perron root of an irreducible nonnegative square matrix.
///
/// The power phase runs on `M + c I` with `c` the smallest row sum, which is
/// primitive even when `M` is periodic.
fn perron_root_irreducible(m: &DMatrix<f64>) -> Result<f64> {
    perron_pair(m).map(|(rho, _)| rho)
}

/// Collatz-Wielandt enclosure `min (Mx)_i/x_i <= rho <= max (Mx)_i/x_i` for `x > 0`.
fn collatz(m: &DMatrix<f64>, x: &DVector<f64>) -> (f64, f64) {
    let y = m * x;
    (0..x.len()).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
        let r = y[i] / x[i];
        (lo.min(r), hi.max(r))
    })
}

fn converged(lo: f64, hi: f64) -> bool {
    let rho = 0.5 * (lo + hi);
    hi - lo <= PERRON_RTOL * rho.abs() || hi - lo <= 8.0 * f64::EPSILON * hi
}

/// Perron root and positive right eigenvector (unit l1 norm) of an
/// irreducible nonnegative matrix.
///
/// Shifted power iteration first; if the spectral gap is too small for it,
/// inverse iteration at the Collatz upper bound `sigma > rho`, where
/// `(sigma I - M)^{-1}` is positive and the iterates stay interior.
pub fn perron_pair(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = m.nrows();
    if n == 1 {
        return Ok((m[(0, 0)], DVector::from_element(1, 1.0)));
    }
    let shift = (0..n).map(|i| m.row(i).sum()).fold(f64::INFINITY, f64::min);
    let mut b = m.clone();
    for i in 0..n {
        b[(i, i)] += shift;
    }
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..PERRON_POWER_ITERS {
        let (lo, hi) = collatz(m, &x);
        if converged(lo, hi) {
            return Ok((0.5 * (lo + hi), x));
        }
        let y = &b * &x;
        let s = y.sum();
        x = y / s;
    }
    let mut last = collatz(m, &x);
    for _ in 0..PERRON_INVERSE_ITERS {
        let hi = last.1;
        let sigma = hi + 4.0 * f64::EPSILON * hi.max(f64::MIN_POSITIVE);
        let a = DMatrix::from_diagonal_element(n, n, sigma) - m;
        let Some(z) = a.lu().solve(&x) else { break };
        if z.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            break;
        }
        x = &z / z.sum();
        last = collatz(m, &x);
        if converged(last.0, last.1) {
            return Ok((0.5 * (last.0 + last.1), x));
        }
    }
    let (lo, hi) = last;
    if converged(lo, hi) {
        return Ok((0.5 * (lo + hi), x));
    }
    Err(Error::numeric(
        MODULE,
        format!("Perron iteration did not reach relative tolerance {PERRON_RTOL} (estimate {}, enclosure width {})", 0.5 * (lo + hi), hi - lo),
    ))
}

/// Spectral radius of a nonnegative matrix: the maximum Perron root over
/// its strongly connected components (a component without internal edges
/// contributes zero).
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "spectral_radius: square matrix expected");
    if n == 0 {
        return Ok(0.0);
    }
    let mut rho = 0.0f64;
    for comp in strongly_connected_components(n, |i, j| m[(i, j)] > 0.0) {
        let sub = DMatrix::from_fn(comp.len(), comp.len(), |a, b| m[(comp[a], comp[b])]);
        if comp.len() == 1 && sub[(0, 0)] == 0.0 {
            continue;
        }
        rho = rho.max(perron_root_irreducible(&sub)?);
    }
    Ok(rho)
}

/// `log rho(W)` for `W = exp(log_w)` entrywise (`-inf` marks a zero entry).
/// Entries are rescaled by their maximum first so tiny weights do not underflow.
pub fn log_spectral_radius(log_w: &DMatrix<f64>) -> Result<f64> {
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if !top.is_finite() {
        return Err(Error::numeric(MODULE, "non-finite weight in transfer matrix"));
    }
    let w = log_w.map(|v| (v - top).exp());
    let rho = spectral_radius(&w)?;
    Ok(top + rho.ln())
}

/// Stationary (left fixed, probability) vector of an irreducible stochastic matrix.
pub fn stationary_vector(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::numeric(MODULE, "stationary system is singular (chain not irreducible?)"))?;
    // clean rounding noise so downstream logs see a proper distribution
    let pi = pi.map(|v| v.max(0.0));
    let s = pi.sum();
    Ok(pi / s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_large_terms() {
        let v = log_sum_exp([1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(std::iter::empty()), f64::NEG_INFINITY);
        let v = log_sum_exp([-1e6, 0.0]);
        assert!(v.abs() < 1e-300);
    }

    #[test]
    fn perron_root_of_periodic_matrix() {
        // 2-cycle: eigenvalues +-1, plain power iteration oscillates
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((spectral_radius(&m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_of_reducible_matrix_takes_max_component() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((spectral_radius(&m).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn golden_mean_root() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((spectral_radius(&m).unwrap() - phi).abs() < 1e-13);
    }

    #[test]
    fn near_degenerate_spectrum() {
        // eigenvalue ratio 1 - 2e-7: power iteration alone stalls
        let (a, b, c, d) = (1.0f64, 1e-7, 1e-7, 1.0 - 1e-7);
        let m = DMatrix::from_row_slice(2, 2, &[a, b, c, d]);
        let exact = 0.5 * (a + d) + (0.25 * (a - d) * (a - d) + b * c).sqrt();
        let (rho, v) = perron_pair(&m).unwrap();
        assert!((rho - exact).abs() < 1e-12);
        assert!(v.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn stationary_of_two_state_chain() {
        let p = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 1.0, 0.0]);
        let pi = stationary_vector(&p).unwrap();
        assert!((pi[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((pi[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn scc_order() {
        let adj = [[false, true, false], [true, false, false], [false, true, true]];
        let comps = strongly_connected_components(3, |i, j| adj[i][j]);
        assert_eq!(comps, vec![vec![0, 1], vec![2]]);
    }
}
