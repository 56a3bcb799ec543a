//! Pressure of the `2^k`-th iterate with block singular-value potentials.
//!
//! The block shift has the admissible words of length `L = 2^k` as symbols
//! and allows `u -> v` whenever `last(u) -> first(v)` is admissible. The
//! potential `psi(u) = sign * t * log X(A^L(u))` only depends on the current
//! block, so the weighted block transfer matrix factors as
//! `W = D_psi * Last * A * First`, and its nonzero spectrum agrees with that
//! of the `q x q` matrix `A * G`, where
//! `G[a][b] = sum_{u : first(u) = a, last(u) = b} exp(psi(u))`.
//! The block pressure is `log rho(A G) / L`.

use nalgebra::DMatrix;

use super::{Convergence, PressureEstimate, Scheme, SingularKind, MODULE};
use crate::cocycle::{all_word_stats, MatrixCocycle};
use crate::error::{Error, Result};
use crate::linalg::{self, LogSumExp};
use crate::symbolic::{Budget, SubshiftSpec};

#[derive(Debug, Clone, Copy)]
struct BlockEntry {
    first: usize,
    last: usize,
    log_norm: f64,
    log_conorm: f64,
}

/// Singular data of every admissible `2^k`-block, computed once and reused
/// for every `t` (root finding evaluates the pressure many times).
#[derive(Debug, Clone)]
pub struct BlockTable {
    spec: SubshiftSpec,
    k: u32,
    block_len: usize,
    sign: f64,
    entries: Vec<BlockEntry>,
}

impl BlockTable {
    pub fn build(spec: &SubshiftSpec, cocycle: &MatrixCocycle, k: u32, budget: &Budget) -> Result<Self> {
        spec.require_irreducible(MODULE)?;
        if k >= 32 {
            return Err(Error::resource(MODULE, format!("block level k = {k} is absurdly large"), budget.max_words));
        }
        let block_len = 1usize << k;
        let count = spec.word_count(block_len);
        if count > budget.max_words {
            return Err(Error::resource(
                MODULE,
                format!(
                    "block alphabet at k = {k} has {count} blocks; largest feasible k is {}",
                    max_feasible_k(spec, budget).map_or("none".to_string(), |m| m.to_string())
                ),
                budget.max_words,
            ));
        }
        let stats = all_word_stats(cocycle, spec, block_len, budget)?;
        let entries = stats
            .iter()
            .map(|(w, s)| BlockEntry {
                first: w.first().unwrap(),
                last: w.last().unwrap(),
                log_norm: s.log_norm,
                log_conorm: s.log_conorm,
            })
            .collect();
        Ok(Self {
            spec: spec.clone(),
            k,
            block_len,
            sign: cocycle.orientation().potential_sign(),
            entries,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn block_count(&self) -> usize {
        self.entries.len()
    }

    /// `max_u (log||A^L(u)|| - log m(A^L(u))) / L`: the conformality defect at level `L`.
    pub fn defect(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| (e.log_norm - e.log_conorm).max(0.0))
            .fold(0.0, f64::max)
            / self.block_len as f64
    }

    /// Block pressure at coefficient `t` for the chosen singular value.
    pub fn pressure(&self, t: f64, which: SingularKind) -> Result<PressureEstimate> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::domain(MODULE, format!("coefficient t must be finite and >= 0, got {t}")));
        }
        let q = self.spec.alphabet_size();
        let mut g = vec![LogSumExp::new(); q * q];
        for e in &self.entries {
            let x = match which {
                SingularKind::Norm => e.log_norm,
                SingularKind::Conorm => e.log_conorm,
            };
            g[e.first * q + e.last].push(self.sign * t * x);
        }
        let log_ag = DMatrix::from_fn(q, q, |a, b| {
            let mut acc = LogSumExp::new();
            for c in 0..q {
                if self.spec.allowed(a, c) {
                    acc.push(g[c * q + b].value());
                }
            }
            acc.value()
        });
        let value = linalg::log_spectral_radius(&log_ag)? / self.block_len as f64;
        // sign * log X is sub-additive for (+, norm) and (-, conorm)
        let sub = (self.sign > 0.0) == (which == SingularKind::Norm);
        Ok(PressureEstimate {
            value,
            level: self.block_len,
            scheme: Scheme::Block,
            convergence: if t == 0.0 {
                Convergence::Exact
            } else if sub {
                Convergence::FromAbove
            } else {
                Convergence::FromBelow
            },
        })
    }
}

/// Largest `k` whose block alphabet fits in the budget.
pub fn max_feasible_k(spec: &SubshiftSpec, budget: &Budget) -> Option<u32> {
    (0..32u32)
        .take_while(|&k| spec.word_count(1usize << k) <= budget.max_words)
        .last()
}

/// `P(f^{2^k}, sign * t * log X(Df^{2^k})) / 2^k` for the cocycle's bundle
/// (`sign = -1` unstable, `+1` stable).
pub fn block_pressure(
    spec: &SubshiftSpec,
    cocycle: &MatrixCocycle,
    t: f64,
    k: u32,
    which: SingularKind,
    budget: &Budget,
) -> Result<PressureEstimate> {
    BlockTable::build(spec, cocycle, k, budget)?.pressure(t, which)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{product_stats, Orientation};
    use crate::pressure::{additive_pressure, EdgePotential};
    use crate::symbolic::{enumerate_words, Word};

    fn rot() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -8.0, 2.0, 0.0])
    }

    fn diag34() -> MatrixCocycle {
        MatrixCocycle::new(
            Orientation::Unstable,
            vec![
                DMatrix::from_diagonal(&nalgebra::dvector![3.0, 4.0]),
                DMatrix::from_diagonal(&nalgebra::dvector![4.0, 3.0]),
            ],
        )
        .unwrap()
    }

    /// Builds the block subshift explicitly and runs the plain transfer-matrix
    /// pressure on it.
    fn explicit_block_pressure(spec: &SubshiftSpec, coc: &MatrixCocycle, t: f64, k: u32, which: SingularKind) -> f64 {
        let len = 1usize << k;
        let blocks: Vec<Word> = enumerate_words(spec, len, &Budget::default()).unwrap().collect();
        let nb = blocks.len();
        let rows = (0..nb)
            .map(|i| {
                (0..nb)
                    .map(|j| spec.allowed(blocks[i].last().unwrap(), blocks[j].first().unwrap()) as u8)
                    .collect()
            })
            .collect();
        let bspec = SubshiftSpec::new(rows).unwrap();
        let psi: Vec<f64> = blocks
            .iter()
            .map(|u| {
                let s = product_stats(coc, u).unwrap();
                let x = if which == SingularKind::Norm { s.log_norm } else { s.log_conorm };
                coc.orientation().potential_sign() * t * x
            })
            .collect();
        let pot = EdgePotential::from_symbol_values(&bspec, &psi).unwrap();
        additive_pressure(&bspec, &pot).unwrap().value / len as f64
    }

    #[test]
    fn reduced_matrix_matches_explicit_block_shift() {
        let gen = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.3, 1.7]);
        let coc = MatrixCocycle::new(Orientation::Unstable, vec![rot(), gen]).unwrap();
        for spec in [SubshiftSpec::full_shift(2), SubshiftSpec::golden_mean()] {
            for k in 0..=2 {
                for t in [0.0, 0.4, 1.3] {
                    for which in [SingularKind::Norm, SingularKind::Conorm] {
                        let fast = block_pressure(&spec, &coc, t, k, which, &Budget::default()).unwrap().value;
                        let slow = explicit_block_pressure(&spec, &coc, t, k, which);
                        assert!((fast - slow).abs() < 1e-11, "k={k} t={t} {which:?}: {fast} vs {slow}");
                    }
                }
            }
        }
    }

    #[test]
    fn scalar_cocycle_gives_zero() {
        let full = SubshiftSpec::full_shift(2);
        let coc = MatrixCocycle::scalar(Orientation::Unstable, 2, &[4.0, 4.0]).unwrap();
        for k in 0..=4 {
            for which in [SingularKind::Norm, SingularKind::Conorm] {
                let p = block_pressure(&full, &coc, 0.5, k, which, &Budget::default()).unwrap();
                assert!(p.value.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rotated_diagonal_blocks_of_two() {
        let full = SubshiftSpec::full_shift(2);
        let coc = MatrixCocycle::new(Orientation::Unstable, vec![rot(), rot()]).unwrap();
        for which in [SingularKind::Norm, SingularKind::Conorm] {
            let p = block_pressure(&full, &coc, 0.5, 1, which, &Budget::default()).unwrap();
            assert!(p.value.abs() < 1e-13);
            assert_eq!(p.level, 2);
        }
    }

    #[test]
    fn diagonal_pair_gap_at_level_zero() {
        let full = SubshiftSpec::full_shift(2);
        let coc = diag34();
        let n = block_pressure(&full, &coc, 1.0, 0, SingularKind::Norm, &Budget::default()).unwrap();
        let c = block_pressure(&full, &coc, 1.0, 0, SingularKind::Conorm, &Budget::default()).unwrap();
        assert!((n.value + 2f64.ln()).abs() < 1e-13);
        assert!((c.value - (2.0f64 / 3.0).ln()).abs() < 1e-13);
    }

    #[test]
    fn budget_error_names_feasible_k() {
        let full = SubshiftSpec::full_shift(2);
        let coc = diag34();
        let err = block_pressure(&full, &coc, 1.0, 5, SingularKind::Norm, &Budget::new(1 << 16)).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Resource { .. }));
        assert!(msg.contains("largest feasible k is 4"), "{msg}");
    }

    #[test]
    fn stable_orientation_flips_sign() {
        let full = SubshiftSpec::full_shift(2);
        let coc = MatrixCocycle::scalar(Orientation::Stable, 1, &[0.25, 0.25]).unwrap();
        // log 2 + t log(1/4) vanishes at t = 1/2
        let p = block_pressure(&full, &coc, 0.5, 2, SingularKind::Norm, &Budget::default()).unwrap();
        assert!(p.value.abs() < 1e-13);
    }
}
