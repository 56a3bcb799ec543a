//! Locally constant derivative cocycles over a subshift.
//!
//! A cocycle assigns one invertible `d x d` matrix to each symbol; the
//! derivative of the `n`-th iterate along a word `w_0 ... w_{n-1}` is the
//! ordered product `A_{w_{n-1}} ... A_{w_0}` (the first symbol acts first).
//! Norm and co-norm (largest/smallest singular value) of these products are
//! the sub- and super-multiplicative quantities behind the pressure layer.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::{enumerate_words, Budget, SubshiftSpec, Word};

const MODULE: &str = "cocycle";

/// Generators with condition number at or above this are rejected.
pub const DEFAULT_CONDITION_CAP: f64 = 1e8;

/// Products are renormalised after this many factors.
const RESCALE_EVERY: usize = 16;
/// ... or as soon as the largest entry leaves this band.
const RESCALE_BAND: (f64, f64) = (1e-100, 1e100);

/// Which invariant bundle a cocycle describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Derivative on the unstable bundle: expanding, potentials `-t log X`.
    Unstable,
    /// Derivative on the stable bundle: contracting, potentials `+t log X`.
    Stable,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::Unstable => Orientation::Stable,
            Orientation::Stable => Orientation::Unstable,
        }
    }

    /// Sign in front of `t` in the dimension potential for this bundle.
    pub fn potential_sign(self) -> f64 {
        match self {
            Orientation::Unstable => -1.0,
            Orientation::Stable => 1.0,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Unstable => "unstable",
            Orientation::Stable => "stable",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCocycle {
    dim: usize,
    generators: Vec<DMatrix<f64>>,
    inverses: Vec<DMatrix<f64>>,
    log_abs_dets: Vec<f64>,
    orientation: Orientation,
    block_length: Option<usize>,
}

fn singular_values(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    if m.nrows() == 1 {
        let v = m[(0, 0)].abs();
        return Ok((v, v));
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if !max.is_finite() {
        return Err(Error::numeric(MODULE, "singular value decomposition produced non-finite values"));
    }
    Ok((max, min))
}

impl MatrixCocycle {
    pub fn new(orientation: Orientation, generators: Vec<DMatrix<f64>>) -> Result<Self> {
        Self::with_condition_cap(orientation, generators, DEFAULT_CONDITION_CAP)
    }

    pub fn with_condition_cap(
        orientation: Orientation,
        generators: Vec<DMatrix<f64>>,
        condition_cap: f64,
    ) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::domain(MODULE, "a cocycle needs at least one generator"));
        };
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::domain(MODULE, "bundle dimension must be positive"));
        }
        let mut inverses = Vec::with_capacity(generators.len());
        let mut log_abs_dets = Vec::with_capacity(generators.len());
        for (s, g) in generators.iter().enumerate() {
            if g.nrows() != dim || g.ncols() != dim {
                return Err(Error::domain(
                    MODULE,
                    format!("generator {s} is {}x{}, expected {dim}x{dim}", g.nrows(), g.ncols()),
                ));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain(MODULE, format!("generator {s} has non-finite entries")));
            }
            let (smax, smin) = singular_values(g)?;
            if smin == 0.0 || smax / smin >= condition_cap {
                return Err(Error::domain(
                    MODULE,
                    format!("generator {s} is singular or has condition number >= {condition_cap:e}"),
                ));
            }
            let inv = g
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::domain(MODULE, format!("generator {s} is not invertible")))?;
            log_abs_dets.push(g.determinant().abs().ln());
            inverses.push(inv);
        }
        Ok(Self {
            dim,
            generators,
            inverses,
            log_abs_dets,
            orientation,
            block_length: None,
        })
    }

    /// `a_s * I_d` for each symbol `s`.
    pub fn scalar(orientation: Orientation, dim: usize, factors: &[f64]) -> Result<Self> {
        let gens = factors
            .iter()
            .map(|&a| DMatrix::identity(dim, dim) * a)
            .collect();
        Self::new(orientation, gens)
    }

    /// Declares the block length `L` after which every product is uniformly
    /// expanding (unstable) or contracting (stable).
    pub fn with_block_length(mut self, block_length: usize) -> Self {
        self.block_length = Some(block_length.max(1));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alphabet_size(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn block_length(&self) -> Option<usize> {
        self.block_length
    }

    /// The inverse cocycle `A_s^{-1}` with flipped orientation.
    ///
    /// Inverting the product along `w` gives the product of inverses along
    /// the reversed word, so the inverse cocycle is meant to be read over
    /// [`SubshiftSpec::reversed`].
    pub fn inverse(&self) -> Self {
        Self {
            dim: self.dim,
            generators: self.inverses.clone(),
            inverses: self.generators.clone(),
            log_abs_dets: self.log_abs_dets.iter().map(|v| -v).collect(),
            orientation: self.orientation.flipped(),
            block_length: self.block_length,
        }
    }

    pub(crate) fn check_alphabet(&self, spec: &SubshiftSpec) -> Result<()> {
        if self.alphabet_size() != spec.alphabet_size() {
            return Err(Error::domain(
                MODULE,
                format!(
                    "cocycle has {} generators but the coding has {} symbols",
                    self.alphabet_size(),
                    spec.alphabet_size()
                ),
            ));
        }
        Ok(())
    }

    /// Verifies uniform expansion (unstable) or contraction (stable) after the
    /// declared block length, or after one step when none is declared.
    pub fn check_hyperbolicity(&self, spec: &SubshiftSpec, budget: &Budget) -> Result<()> {
        self.check_alphabet(spec)?;
        let l = self.block_length.unwrap_or(1);
        for w in enumerate_words(spec, l, budget)? {
            let st = product_stats(self, &w)?;
            let ok = match self.orientation {
                Orientation::Unstable => st.log_conorm > 0.0,
                Orientation::Stable => st.log_norm < 0.0,
            };
            if !ok {
                let what = match self.orientation {
                    Orientation::Unstable => "co-norm <= 1",
                    Orientation::Stable => "norm >= 1",
                };
                return Err(Error::domain(
                    MODULE,
                    format!("{} cocycle is not hyperbolic after {l} steps: word {w} has {what}", self.orientation),
                ));
            }
        }
        Ok(())
    }
}

/// Log singular data of a product along a word.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularStats {
    pub log_norm: f64,
    pub log_conorm: f64,
    pub log_abs_det: f64,
    pub length: usize,
    pub dim: usize,
}

impl SingularStats {
    /// `log m <= log|det|/d <= log ||.||` up to `slack`.
    pub fn sandwich_holds(&self, slack: f64) -> bool {
        let phi = self.log_abs_det / self.dim as f64;
        self.log_conorm <= phi + slack && phi <= self.log_norm + slack
    }
}

/// Ordered product `mats[idx[n-1]] ... mats[idx[0]]`, renormalised every
/// few factors; returns the scaled product and the accumulated log scale.
fn scaled_product(
    mats: &[DMatrix<f64>],
    order: impl Iterator<Item = usize>,
    dim: usize,
) -> Result<(DMatrix<f64>, f64)> {
    let mut acc = DMatrix::<f64>::identity(dim, dim);
    let mut log_scale = 0.0;
    for (i, s) in order.enumerate() {
        acc = &mats[s] * acc;
        let m = acc.amax();
        if (i + 1) % RESCALE_EVERY == 0 || !(RESCALE_BAND.0..RESCALE_BAND.1).contains(&m) {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::numeric(MODULE, "product degenerated while rescaling"));
            }
            acc /= m;
            log_scale += m.ln();
        }
    }
    Ok((acc, log_scale))
}

/// Singular statistics of the cocycle product along `word`.
///
/// The co-norm is computed as the reciprocal norm of the inverse product,
/// which keeps relative accuracy for ill-conditioned products; the
/// determinant is the sum of generator log-determinants.
pub fn product_stats(cocycle: &MatrixCocycle, word: &Word) -> Result<SingularStats> {
    product_stats_raw(cocycle, word.symbols())
}

pub(crate) fn product_stats_raw(cocycle: &MatrixCocycle, w: &[usize]) -> Result<SingularStats> {
    if w.is_empty() {
        return Err(Error::domain(MODULE, "product_stats needs a word of length >= 1"));
    }
    if let Some(&bad) = w.iter().find(|&&s| s >= cocycle.alphabet_size()) {
        return Err(Error::domain(MODULE, format!("symbol {bad} has no generator")));
    }
    let d = cocycle.dim;
    let (fwd, fwd_scale) = scaled_product(&cocycle.generators, w.iter().copied(), d)?;
    // (A_{n-1} ... A_0)^{-1} = A_0^{-1} ... A_{n-1}^{-1}: apply in reverse order
    let (inv, inv_scale) = scaled_product(&cocycle.inverses, w.iter().rev().copied(), d)?;
    let (fmax, _) = singular_values(&fwd)?;
    let (imax, _) = singular_values(&inv)?;
    let log_norm = fmax.ln() + fwd_scale;
    let log_conorm = -(imax.ln() + inv_scale);
    let log_abs_det = w.iter().map(|&s| cocycle.log_abs_dets[s]).sum();
    if !log_norm.is_finite() || !log_conorm.is_finite() {
        return Err(Error::numeric(MODULE, "product norm is not finite"));
    }
    Ok(SingularStats {
        log_norm,
        log_conorm,
        log_abs_det,
        length: w.len(),
        dim: d,
    })
}

/// Stats for every admissible word of length `n`, in lexicographic word order.
pub fn all_word_stats(
    cocycle: &MatrixCocycle,
    spec: &SubshiftSpec,
    n: usize,
    budget: &Budget,
) -> Result<Vec<(Word, SingularStats)>> {
    cocycle.check_alphabet(spec)?;
    let words: Vec<Word> = enumerate_words(spec, n, budget)?.collect();
    words
        .into_par_iter()
        .map(|w| product_stats(cocycle, &w).map(|s| (w, s)))
        .collect()
}

/// `max_w (log||A^n(w)|| - log m(A^n(w))) / n` over admissible words of length `n`.
/// Zero for conformal cocycles; a vanishing limit characterises average conformality.
pub fn conformality_defect(
    cocycle: &MatrixCocycle,
    spec: &SubshiftSpec,
    n: usize,
    budget: &Budget,
) -> Result<f64> {
    let stats = all_word_stats(cocycle, spec, n, budget)?;
    Ok(stats
        .iter()
        .map(|(_, s)| ((s.log_norm - s.log_conorm) / n as f64).max(0.0))
        .fold(0.0, f64::max))
}

/// `(min_w log m / n, max_w log||.|| / n)`: an enclosure of every Lyapunov
/// exponent of every invariant measure on the bundle.
pub fn lyapunov_bounds(
    cocycle: &MatrixCocycle,
    spec: &SubshiftSpec,
    n: usize,
    budget: &Budget,
) -> Result<(f64, f64)> {
    let stats = all_word_stats(cocycle, spec, n, budget)?;
    let nf = n as f64;
    let lo = stats.iter().map(|(_, s)| s.log_conorm / nf).fold(f64::INFINITY, f64::min);
    let hi = stats.iter().map(|(_, s)| s.log_norm / nf).fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

impl fmt::Display for MatrixCocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.dim)?;
        writeln!(f, "{}", self.orientation)?;
        if let Some(l) = self.block_length {
            writeln!(f, "block {l}")?;
        }
        for (s, g) in self.generators.iter().enumerate() {
            if s > 0 {
                writeln!(f)?;
            }
            for i in 0..self.dim {
                let row: Vec<String> = (0..self.dim).map(|j| format!("{:?}", g[(i, j)])).collect();
                writeln!(f, "{}", row.join(" "))?;
            }
        }
        Ok(())
    }
}

/// Text form: bundle dimension, orientation (`unstable` | `stable`), an
/// optional `block L` line, then `d` rows of decimals per symbol.
impl FromStr for MatrixCocycle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .peekable();
        let dim: usize = lines
            .next()
            .ok_or_else(|| Error::parse(MODULE, "empty cocycle document"))?
            .parse()
            .map_err(|e| Error::parse(MODULE, format!("bundle dimension: {e}")))?;
        let orientation = match lines.next() {
            Some("unstable") | Some("forward") => Orientation::Unstable,
            Some("stable") | Some("backward") | Some("inverse") => Orientation::Stable,
            other => {
                return Err(Error::parse(
                    MODULE,
                    format!("expected orientation 'unstable' or 'stable', found {other:?}"),
                ))
            }
        };
        let mut block = None;
        if let Some(l) = lines.peek() {
            if let Some(rest) = l.strip_prefix("block") {
                block = Some(
                    rest.trim()
                        .parse::<usize>()
                        .map_err(|e| Error::parse(MODULE, format!("block length: {e}")))?,
                );
                lines.next();
            }
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for l in lines {
            let row = l
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::parse(MODULE, format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != dim {
                return Err(Error::parse(MODULE, format!("matrix row has {} entries, expected {dim}", row.len())));
            }
            rows.push(row);
        }
        if dim == 0 || rows.is_empty() || !rows.len().is_multiple_of(dim) {
            return Err(Error::parse(MODULE, format!("found {} matrix rows, not a multiple of {dim}", rows.len())));
        }
        let gens = rows
            .chunks(dim)
            .map(|c| DMatrix::from_fn(dim, dim, |i, j| c[i][j]))
            .collect();
        let c = MatrixCocycle::new(orientation, gens)?;
        Ok(match block {
            Some(l) => c.with_block_length(l),
            None => c,
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// `R_90 diag(2, 8)`.
    pub(crate) fn rotated_diag() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -8.0, 2.0, 0.0])
    }

    fn word(v: &[usize]) -> Word {
        Word::from_vec_unchecked(v.to_vec())
    }

    #[test]
    fn scalar_cocycle_stats() {
        let c = MatrixCocycle::scalar(Orientation::Unstable, 2, &[3.0, 3.0]).unwrap();
        for n in 1..=20 {
            let s = product_stats(&c, &word(&vec![1; n])).unwrap();
            let expected = n as f64 * 3f64.ln();
            assert!((s.log_norm - expected).abs() < 1e-12);
            assert!((s.log_conorm - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rotated_diagonal_stats() {
        let c = MatrixCocycle::new(Orientation::Unstable, vec![rotated_diag()]).unwrap();
        let one = product_stats(&c, &word(&[0])).unwrap();
        assert!((one.log_norm - 8f64.ln()).abs() < 1e-14);
        assert!((one.log_conorm - 2f64.ln()).abs() < 1e-14);
        let two = product_stats(&c, &word(&[0, 0])).unwrap();
        assert!((two.log_norm - 16f64.ln()).abs() < 1e-14);
        assert!((two.log_conorm - 16f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn rescaling_keeps_long_products_finite() {
        let c = MatrixCocycle::scalar(Orientation::Unstable, 2, &[1e20]).unwrap();
        let s = product_stats(&c, &word(&[0; 40])).unwrap();
        assert!((s.log_norm - 40.0 * 1e20f64.ln()).abs() < 1e-9);
        assert!((s.log_conorm - s.log_norm).abs() < 1e-9);
    }

    #[test]
    fn defect_examples() {
        let full = SubshiftSpec::full_shift(2);
        let b = Budget::default();
        let scalar = MatrixCocycle::scalar(Orientation::Unstable, 2, &[3.0, 3.0]).unwrap();
        for n in 1..=6 {
            assert!(conformality_defect(&scalar, &full, n, &b).unwrap().abs() < 1e-12);
        }
        let m = rotated_diag();
        let rot = MatrixCocycle::new(Orientation::Unstable, vec![m.clone(), m]).unwrap();
        for k in 1..=4 {
            assert!(conformality_defect(&rot, &full, 2 * k, &b).unwrap() < 1e-12);
            let odd = conformality_defect(&rot, &full, 2 * k + 1, &b).unwrap();
            assert!((odd - 4f64.ln() / (2 * k + 1) as f64).abs() < 1e-12);
        }
        let diag = MatrixCocycle::new(
            Orientation::Unstable,
            vec![
                DMatrix::from_diagonal(&nalgebra::dvector![3.0, 4.0]),
                DMatrix::from_diagonal(&nalgebra::dvector![4.0, 3.0]),
            ],
        )
        .unwrap();
        for n in 1..=8 {
            assert!(conformality_defect(&diag, &full, n, &b).unwrap() >= (4.0f64 / 3.0).ln() - 1e-12);
        }
    }

    #[test]
    fn lyapunov_examples() {
        let full = SubshiftSpec::full_shift(2);
        let b = Budget::default();
        let scalar = MatrixCocycle::scalar(Orientation::Unstable, 2, &[3.0, 3.0]).unwrap();
        let (lo, hi) = lyapunov_bounds(&scalar, &full, 3, &b).unwrap();
        assert!((lo - 3f64.ln()).abs() < 1e-12 && (hi - 3f64.ln()).abs() < 1e-12);
        let diag = MatrixCocycle::new(
            Orientation::Unstable,
            vec![
                DMatrix::from_diagonal(&nalgebra::dvector![3.0, 4.0]),
                DMatrix::from_diagonal(&nalgebra::dvector![4.0, 3.0]),
            ],
        )
        .unwrap();
        let (lo, hi) = lyapunov_bounds(&diag, &full, 1, &b).unwrap();
        assert!((lo - 3f64.ln()).abs() < 1e-12 && (hi - 4f64.ln()).abs() < 1e-12);
        let m = rotated_diag();
        let rot = MatrixCocycle::new(Orientation::Unstable, vec![m.clone(), m]).unwrap();
        let (lo, hi) = lyapunov_bounds(&rot, &full, 2, &b).unwrap();
        assert!((lo - 4f64.ln()).abs() < 1e-12 && (hi - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_singular_and_ill_conditioned() {
        let sing = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(MatrixCocycle::new(Orientation::Unstable, vec![sing]).is_err());
        let ill = DMatrix::from_diagonal(&nalgebra::dvector![1e9, 1.0]);
        assert!(MatrixCocycle::new(Orientation::Unstable, vec![ill]).is_err());
    }

    #[test]
    fn hyperbolicity_with_block_length() {
        let full = SubshiftSpec::full_shift(2);
        let b = Budget::default();
        // the second generator alone contracts one direction, blocks of 2 expand
        let a = DMatrix::from_diagonal(&nalgebra::dvector![4.0, 4.0]);
        let c = DMatrix::from_diagonal(&nalgebra::dvector![2.0, 0.8]);
        let coc = MatrixCocycle::new(Orientation::Unstable, vec![a, c]).unwrap();
        assert!(coc.check_hyperbolicity(&full, &b).is_err());
        let gm = SubshiftSpec::golden_mean();
        let coc = coc.with_block_length(2);
        assert!(coc.check_hyperbolicity(&gm, &b).is_ok());
        assert!(coc.check_hyperbolicity(&full, &b).is_err());
        let stable = MatrixCocycle::scalar(Orientation::Stable, 1, &[0.25, 0.2]).unwrap();
        assert!(stable.check_hyperbolicity(&full, &b).is_ok());
    }

    #[test]
    fn inverse_reverses_products() {
        let m = rotated_diag();
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.0, 2.0]);
        let c = MatrixCocycle::new(Orientation::Stable, vec![m, d]).unwrap();
        let inv = c.inverse();
        assert_eq!(inv.orientation(), Orientation::Unstable);
        let w = word(&[0, 1, 1, 0, 1]);
        let s = product_stats(&c, &w).unwrap();
        let si = product_stats(&inv, &w.reversed()).unwrap();
        assert!((s.log_norm + si.log_conorm).abs() < 1e-12);
        assert!((s.log_conorm + si.log_norm).abs() < 1e-12);
        assert!((s.log_abs_det + si.log_abs_det).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let m = rotated_diag();
        let c = MatrixCocycle::new(Orientation::Unstable, vec![m.clone(), m]).unwrap().with_block_length(2);
        let back: MatrixCocycle = c.to_string().parse().unwrap();
        assert_eq!(back, c);
        let parsed: MatrixCocycle = "1\nstable\n0.25\n0.2\n".parse().unwrap();
        assert_eq!(parsed.alphabet_size(), 2);
        assert_eq!(parsed.orientation(), Orientation::Stable);
        assert!("2\nsideways\n1 0\n0 1\n".parse::<MatrixCocycle>().is_err());
        assert!("2\nunstable\n1 0\n".parse::<MatrixCocycle>().is_err());
    }
}
