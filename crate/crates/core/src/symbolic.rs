//! Subshifts of finite type: admissible words, topological entropy and
//! Markov measures.
//!
//! Every pressure computation in this crate runs over cylinders of a
//! subshift. For an epsilon below the minimal gap between Markov rectangles,
//! maximal `(n, eps)`-separated sets are in bijection with the admissible
//! words of length `n`, so sums over separated sets become sums over words.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

const MODULE: &str = "symbolic";

/// Default cap on the number of words any single enumeration may produce.
pub const DEFAULT_MAX_WORDS: u128 = 1 << 20;

/// Enumeration budget shared by every operation that walks cylinders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_words: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_words: DEFAULT_MAX_WORDS,
        }
    }
}

impl Budget {
    pub fn new(max_words: u128) -> Self {
        Self { max_words }
    }

    pub(crate) fn check(&self, module: &'static str, what: &str, count: u128) -> Result<()> {
        if count > self.max_words {
            Err(Error::resource(
                module,
                format!("{what} needs {count} words, over the enumeration budget"),
                self.max_words,
            ))
        } else {
            Ok(())
        }
    }
}

/// A subshift of finite type on the alphabet `0..q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubshiftSpec {
    alphabet_size: usize,
    transitions: Vec<Vec<bool>>,
    irreducible: bool,
}

impl SubshiftSpec {
    /// Builds a subshift from a square 0/1 matrix. Every symbol must have at
    /// least one successor and one predecessor.
    pub fn new(transitions: Vec<Vec<u8>>) -> Result<Self> {
        let q = transitions.len();
        if q == 0 {
            return Err(Error::domain(MODULE, "alphabet must be nonempty"));
        }
        let mut rows = Vec::with_capacity(q);
        for (i, row) in transitions.iter().enumerate() {
            if row.len() != q {
                return Err(Error::domain(
                    MODULE,
                    format!("transition row {i} has {} entries, expected {q}", row.len()),
                ));
            }
            let mut r = Vec::with_capacity(q);
            for &v in row {
                match v {
                    0 => r.push(false),
                    1 => r.push(true),
                    other => {
                        return Err(Error::domain(
                            MODULE,
                            format!("transition entries must be 0 or 1, found {other} in row {i}"),
                        ))
                    }
                }
            }
            rows.push(r);
        }
        for (i, row) in rows.iter().enumerate() {
            if !row.iter().any(|&b| b) {
                return Err(Error::domain(MODULE, format!("symbol {i} has no successor")));
            }
            if !(0..q).any(|j| rows[j][i]) {
                return Err(Error::domain(MODULE, format!("symbol {i} has no predecessor")));
            }
        }
        let irreducible = linalg::strongly_connected_components(q, |i, j| rows[i][j]).len() == 1;
        Ok(Self {
            alphabet_size: q,
            transitions: rows,
            irreducible,
        })
    }

    pub fn full_shift(q: usize) -> Self {
        Self::new(vec![vec![1; q]; q]).expect("full shift is always valid")
    }

    /// The shift on `{0,1}` forbidding the word `11`.
    pub fn golden_mean() -> Self {
        Self::new(vec![vec![1, 1], vec![1, 0]]).expect("golden mean shift is valid")
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    #[inline]
    pub fn allowed(&self, from: usize, to: usize) -> bool {
        self.transitions[from][to]
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    pub fn is_full_shift(&self) -> bool {
        self.transitions.iter().all(|r| r.iter().all(|&b| b))
    }

    pub(crate) fn require_irreducible(&self, module: &'static str) -> Result<()> {
        if self.irreducible {
            Ok(())
        } else {
            Err(Error::domain(
                module,
                "transition graph is not strongly connected; reducible codings are rejected",
            ))
        }
    }

    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let q = self.alphabet_size;
        DMatrix::from_fn(q, q, |i, j| if self.transitions[i][j] { 1.0 } else { 0.0 })
    }

    /// Time reversal: the subshift with transposed transitions.
    pub fn reversed(&self) -> Self {
        let q = self.alphabet_size;
        let rows = (0..q)
            .map(|i| (0..q).map(|j| self.transitions[j][i] as u8).collect())
            .collect();
        Self::new(rows).expect("transpose of a valid subshift is valid")
    }

    pub fn is_admissible(&self, symbols: &[usize]) -> bool {
        symbols.iter().all(|&s| s < self.alphabet_size)
            && symbols.windows(2).all(|w| self.transitions[w[0]][w[1]])
    }

    /// Number of admissible words of length `n`, saturating at `u128::MAX`.
    pub fn word_count(&self, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        let q = self.alphabet_size;
        // counts[j] = number of admissible words of the current length ending in j
        let mut counts = vec![1u128; q];
        for _ in 1..n {
            let mut next = vec![0u128; q];
            for (i, &c) in counts.iter().enumerate() {
                for (j, nx) in next.iter_mut().enumerate() {
                    if self.transitions[i][j] {
                        *nx = nx.saturating_add(c);
                    }
                }
            }
            counts = next;
        }
        counts.iter().fold(0u128, |a, &c| a.saturating_add(c))
    }

    /// First successor of `s` (every symbol has one).
    fn first_successor(&self, s: usize) -> usize {
        self.transitions[s].iter().position(|&b| b).unwrap()
    }

    fn next_successor(&self, prev: Option<usize>, after: usize) -> Option<usize> {
        ((after + 1)..self.alphabet_size).find(|&j| prev.is_none_or(|p| self.transitions[p][j]))
    }
}

impl fmt::Display for SubshiftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.alphabet_size)?;
        for row in &self.transitions {
            let line: String = row.iter().map(|&b| if b { '1' } else { '0' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Text form: the alphabet size on the first line, then one row of 0/1
/// digits per symbol. Blank lines and `#` comments are ignored.
impl FromStr for SubshiftSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let q: usize = lines
            .next()
            .ok_or_else(|| Error::parse(MODULE, "empty subshift document"))?
            .parse()
            .map_err(|e| Error::parse(MODULE, format!("alphabet size: {e}")))?;
        let mut rows = Vec::with_capacity(q);
        for line in lines {
            let row = line
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| match c {
                    '0' => Ok(0u8),
                    '1' => Ok(1u8),
                    other => Err(Error::parse(MODULE, format!("unexpected character {other:?} in transition row"))),
                })
                .collect::<Result<Vec<u8>>>()?;
            rows.push(row);
        }
        if rows.len() != q {
            return Err(Error::parse(
                MODULE,
                format!("expected {q} transition rows, found {}", rows.len()),
            ));
        }
        Self::new(rows)
    }
}

/// An admissible finite word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(spec: &SubshiftSpec, symbols: Vec<usize>) -> Result<Self> {
        if spec.is_admissible(&symbols) {
            Ok(Word(symbols))
        } else {
            Err(Error::domain(MODULE, format!("word {symbols:?} is not admissible")))
        }
    }

    #[cfg(test)]
    pub(crate) fn from_vec_unchecked(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// Concatenation `self other`, if the junction is admissible.
    pub fn concat(&self, spec: &SubshiftSpec, other: &Word) -> Option<Word> {
        match (self.last(), other.first()) {
            (Some(a), Some(b)) if !spec.allowed(a, b) => None,
            _ => {
                let mut v = self.0.clone();
                v.extend_from_slice(&other.0);
                Some(Word(v))
            }
        }
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Admissible words of a fixed length in lexicographic order.
#[derive(Debug, Clone)]
pub struct Words<'a> {
    spec: &'a SubshiftSpec,
    current: Option<Vec<usize>>,
    remaining: u128,
}

impl<'a> Words<'a> {
    fn start(spec: &'a SubshiftSpec, n: usize, count: u128) -> Self {
        let mut w = Vec::with_capacity(n);
        if n > 0 {
            w.push(0);
            while w.len() < n {
                let s = spec.first_successor(*w.last().unwrap());
                w.push(s);
            }
        }
        Self {
            spec,
            current: Some(w),
            remaining: count,
        }
    }

    fn advance(&mut self) {
        let Some(w) = self.current.as_mut() else { return };
        let n = w.len();
        for p in (0..n).rev() {
            let prev = if p == 0 { None } else { Some(w[p - 1]) };
            if let Some(s) = self.spec.next_successor(prev, w[p]) {
                w[p] = s;
                for k in (p + 1)..n {
                    w[k] = self.spec.first_successor(w[k - 1]);
                }
                return;
            }
        }
        self.current = None;
    }
}

impl Iterator for Words<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.remaining == 0 {
            return None;
        }
        let out = Word(self.current.clone()?);
        self.remaining -= 1;
        self.advance();
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (r, Some(r))
    }
}

impl ExactSizeIterator for Words<'_> {}

/// Lazily enumerates the admissible words of length `n` (lexicographic order).
pub fn enumerate_words<'a>(spec: &'a SubshiftSpec, n: usize, budget: &Budget) -> Result<Words<'a>> {
    if n == 0 {
        return Err(Error::domain(MODULE, "word length must be at least 1"));
    }
    let count = spec.word_count(n);
    budget.check(MODULE, &format!("enumerating words of length {n}"), count)?;
    Ok(Words::start(spec, n, count))
}

/// Topological entropy in nats: `log` of the Perron root of the transition matrix.
pub fn topological_entropy(spec: &SubshiftSpec) -> Result<f64> {
    spec.require_irreducible(MODULE)?;
    Ok(linalg::spectral_radius(&spec.transition_matrix())?.ln())
}

/// A one-step Markov measure compatible with a subshift.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMeasure {
    stochastic: DMatrix<f64>,
    stationary: DVector<f64>,
}

impl MarkovMeasure {
    /// Checks support and row sums, then solves for the stationary vector.
    pub fn new(spec: &SubshiftSpec, stochastic: DMatrix<f64>) -> Result<Self> {
        Self::check_stochastic(spec, &stochastic)?;
        let stationary = linalg::stationary_vector(&stochastic)?;
        let m = Self {
            stochastic,
            stationary,
        };
        m.check_stationary()?;
        Ok(m)
    }

    /// Uses a caller-supplied stationary vector (needed when the chain has
    /// several closed classes and the fixed vector is not unique).
    pub fn with_stationary(
        spec: &SubshiftSpec,
        stochastic: DMatrix<f64>,
        stationary: DVector<f64>,
    ) -> Result<Self> {
        Self::check_stochastic(spec, &stochastic)?;
        let m = Self {
            stochastic,
            stationary,
        };
        m.check_stationary()?;
        Ok(m)
    }

    /// Product measure with the given marginal on a full shift.
    pub fn bernoulli(spec: &SubshiftSpec, probs: &[f64]) -> Result<Self> {
        let q = spec.alphabet_size();
        if probs.len() != q {
            return Err(Error::domain(MODULE, "Bernoulli weights must match the alphabet"));
        }
        let p = DMatrix::from_fn(q, q, |_, j| probs[j]);
        Self::with_stationary(spec, p, DVector::from_column_slice(probs))
    }

    /// A random compatible measure: uniform weights on allowed transitions,
    /// raised to a random power so that some rows are far from uniform.
    pub fn random<R: Rng + ?Sized>(spec: &SubshiftSpec, rng: &mut R) -> Result<Self> {
        let q = spec.alphabet_size();
        let mut p = DMatrix::zeros(q, q);
        for i in 0..q {
            let power: f64 = rng.random_range(0.5..4.0);
            let mut s = 0.0;
            for j in 0..q {
                if spec.allowed(i, j) {
                    let u: f64 = rng.random_range(1e-3..1.0);
                    p[(i, j)] = u.powf(power);
                    s += p[(i, j)];
                }
            }
            for j in 0..q {
                p[(i, j)] /= s;
            }
        }
        Self::new(spec, p)
    }

    fn check_stochastic(spec: &SubshiftSpec, p: &DMatrix<f64>) -> Result<()> {
        let q = spec.alphabet_size();
        if p.nrows() != q || p.ncols() != q {
            return Err(Error::domain(MODULE, format!("stochastic matrix must be {q}x{q}")));
        }
        for i in 0..q {
            let mut s = 0.0;
            for j in 0..q {
                let v = p[(i, j)];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::domain(MODULE, format!("entry ({i},{j}) = {v} is not a probability")));
                }
                if v > 0.0 && !spec.allowed(i, j) {
                    return Err(Error::domain(
                        MODULE,
                        format!("positive probability on forbidden transition {i}->{j}"),
                    ));
                }
                s += v;
            }
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::domain(MODULE, format!("row {i} sums to {s}, not 1")));
            }
        }
        Ok(())
    }

    fn check_stationary(&self) -> Result<()> {
        let pi = &self.stationary;
        if pi.len() != self.stochastic.nrows() || pi.iter().any(|&v| v < 0.0) {
            return Err(Error::domain(MODULE, "stationary vector is not a probability vector"));
        }
        if (pi.sum() - 1.0).abs() > 1e-10 {
            return Err(Error::domain(MODULE, "stationary vector does not sum to 1"));
        }
        let moved = self.stochastic.tr_mul(pi);
        let err = (moved - pi).amax();
        if err > 1e-10 {
            return Err(Error::domain(
                MODULE,
                format!("stationary vector is not invariant (residual {err:e})"),
            ));
        }
        Ok(())
    }

    pub fn stochastic(&self) -> &DMatrix<f64> {
        &self.stochastic
    }

    pub fn stationary(&self) -> &DVector<f64> {
        &self.stationary
    }

    pub fn alphabet_size(&self) -> usize {
        self.stationary.len()
    }

    /// Measure of the cylinder `[w]`.
    pub fn cylinder(&self, w: &[usize]) -> f64 {
        let Some((&first, _)) = w.split_first() else { return 1.0 };
        w.windows(2)
            .fold(self.stationary[first], |acc, p| acc * self.stochastic[(p[0], p[1])])
    }
}

/// Entropy of a Markov measure in nats, with `0 log 0 = 0`.
pub fn markov_entropy(measure: &MarkovMeasure) -> f64 {
    let p = &measure.stochastic;
    let pi = &measure.stationary;
    let q = pi.len();
    let mut h = 0.0;
    for i in 0..q {
        let mut row = 0.0;
        for j in 0..q {
            let v = p[(i, j)];
            if v > 0.0 {
                row -= v * v.ln();
            }
        }
        h += pi[i] * row;
    }
    h
}

/// `sum_ij pi_i P_ij f(i, j)`; `f` is only evaluated on edges of positive mass.
pub fn integrate_edge_function(measure: &MarkovMeasure, f: impl Fn(usize, usize) -> f64) -> f64 {
    let p = &measure.stochastic;
    let pi = &measure.stationary;
    let q = pi.len();
    let mut acc = 0.0;
    for i in 0..q {
        for j in 0..q {
            let w = pi[i] * p[(i, j)];
            if w > 0.0 {
                acc += w * f(i, j);
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// `1^T A^(n-1) 1` by naive float matrix powers.
    fn count_oracle(spec: &SubshiftSpec, n: usize) -> f64 {
        let a = spec.transition_matrix();
        let mut m = DMatrix::<f64>::identity(a.nrows(), a.nrows());
        for _ in 1..n {
            m = &m * &a;
        }
        m.sum()
    }

    #[test]
    fn word_counts_match_examples() {
        let b = Budget::default();
        assert_eq!(enumerate_words(&SubshiftSpec::full_shift(2), 3, &b).unwrap().count(), 8);
        assert_eq!(enumerate_words(&SubshiftSpec::golden_mean(), 3, &b).unwrap().count(), 5);
        assert_eq!(enumerate_words(&SubshiftSpec::full_shift(2), 1, &b).unwrap().count(), 2);
    }

    #[test]
    fn word_count_law() {
        let specs = [
            SubshiftSpec::golden_mean(),
            SubshiftSpec::full_shift(3),
            SubshiftSpec::new(vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 1]]).unwrap(),
        ];
        for spec in &specs {
            for n in 1..=10 {
                let words: Vec<Word> = enumerate_words(spec, n, &Budget::default()).unwrap().collect();
                assert_eq!(words.len() as f64, count_oracle(spec, n));
                assert!(words.iter().all(|w| spec.is_admissible(w.symbols()) && w.len() == n));
                assert!(words.windows(2).all(|p| p[0] < p[1]), "lexicographic and distinct");
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let err = enumerate_words(&SubshiftSpec::full_shift(2), 21, &Budget::default()).unwrap_err();
        assert!(matches!(err, Error::Resource { limit, .. } if limit == DEFAULT_MAX_WORDS));
        assert!(err.to_string().contains("symbolic"));
    }

    #[test]
    fn entropy_examples() {
        let h2 = topological_entropy(&SubshiftSpec::full_shift(2)).unwrap();
        assert!((h2 - 2f64.ln()).abs() < 1e-12);
        let hg = topological_entropy(&SubshiftSpec::golden_mean()).unwrap();
        assert!((hg - ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
        assert!((hg - 0.481212).abs() < 1e-6);
        let h3 = topological_entropy(&SubshiftSpec::full_shift(3)).unwrap();
        assert!((h3 - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn reducible_spec_rejected_for_entropy() {
        let spec = SubshiftSpec::new(vec![vec![1, 1], vec![0, 1]]).unwrap();
        assert!(!spec.is_irreducible());
        assert!(matches!(topological_entropy(&spec), Err(Error::Domain { .. })));
    }

    #[test]
    fn dead_symbols_rejected() {
        assert!(SubshiftSpec::new(vec![vec![1, 0], vec![1, 0]]).is_err());
        assert!(SubshiftSpec::new(vec![vec![0, 0], vec![1, 1]]).is_err());
        assert!(SubshiftSpec::new(vec![vec![1, 2], vec![1, 1]]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let spec = SubshiftSpec::golden_mean();
        let text = spec.to_string();
        assert_eq!(text, "2\n11\n10\n");
        let back: SubshiftSpec = "# golden mean\n2\n1 1\n\n10\n".parse().unwrap();
        assert_eq!(back, spec);
        assert!("3\n111\n111\n".parse::<SubshiftSpec>().is_err());
    }

    #[test]
    fn markov_entropy_examples() {
        let full = SubshiftSpec::full_shift(2);
        let b = MarkovMeasure::bernoulli(&full, &[0.5, 0.5]).unwrap();
        assert!((markov_entropy(&b) - 2f64.ln()).abs() < 1e-15);

        let gm = SubshiftSpec::golden_mean();
        let m = MarkovMeasure::new(&gm, DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 1.0, 0.0])).unwrap();
        assert!((m.stationary()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((markov_entropy(&m) - 2.0 / 3.0 * 2f64.ln()).abs() < 1e-12);
        assert!((markov_entropy(&m) - 0.462098).abs() < 1e-6);

        let cycle = MarkovMeasure::new(&full, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_eq!(markov_entropy(&cycle), 0.0);
    }

    #[test]
    fn edge_integral_examples() {
        let full = SubshiftSpec::full_shift(2);
        let b = MarkovMeasure::bernoulli(&full, &[0.5, 0.5]).unwrap();
        assert!((integrate_edge_function(&b, |_, _| 1.7) - 1.7).abs() < 1e-15);
        let mu = [2f64, 4.0];
        let v = integrate_edge_function(&b, |i, _| mu[i].ln());
        assert!((v - 1.5 * 2f64.ln()).abs() < 1e-14);

        let fixed = MarkovMeasure::new(&full, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0])).unwrap();
        let v = integrate_edge_function(&fixed, |i, j| if (i, j) == (0, 0) { 3f64.ln() } else { f64::NAN });
        assert!((v - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn measure_rejects_forbidden_mass() {
        let gm = SubshiftSpec::golden_mean();
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        assert!(MarkovMeasure::new(&gm, bad).is_err());
        let unnormalized = DMatrix::from_row_slice(2, 2, &[0.5, 0.6, 1.0, 0.0]);
        assert!(MarkovMeasure::new(&gm, unnormalized).is_err());
    }

    #[test]
    fn entropy_bounds_on_random_measures() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for spec in [SubshiftSpec::full_shift(2), SubshiftSpec::golden_mean(), SubshiftSpec::full_shift(3)] {
            let htop = topological_entropy(&spec).unwrap();
            for _ in 0..1000 {
                let m = MarkovMeasure::random(&spec, &mut rng).unwrap();
                let h = markov_entropy(&m);
                assert!(h >= 0.0 && h <= htop + 1e-9, "h = {h}, htop = {htop}");
            }
        }
    }
}
