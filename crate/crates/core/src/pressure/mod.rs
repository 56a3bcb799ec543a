//! Topological pressure over subshifts.
//!
//! Three schemes are provided:
//!
//! * transfer matrix: exact pressure of a potential depending on one edge,
//!   `log rho(W)` with `W_ij = A_ij exp(f(i, j))`;
//! * cylinder sums: `(1/n) log sum_{|w| = n} exp(phi_n(w))`, the level-`n`
//!   approximant for any potential family, including sub- and
//!   super-additive singular-value families;
//! * blocks of length `2^k`: the pressure of the `2^k`-th iterate with the
//!   block singular-value potential, evaluated exactly through the transfer
//!   matrix of the block shift (see [`block`]).
//!
//! With locally constant data every sum over separated sets is a sum over
//! cylinders, so no limit in the separation scale is taken.

pub mod block;
pub mod variational;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{product_stats, MatrixCocycle};
use crate::error::{Error, Result};
use crate::linalg::{self, LogSumExp};
use crate::symbolic::{enumerate_words, Budget, SubshiftSpec, Word};

pub use block::{block_pressure, BlockTable};
pub use variational::{free_energy, gibbs_measure, variational_gap, VariationalOptions, VariationalResult};

const MODULE: &str = "pressure";

/// A potential depending on the current and the next symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePotential {
    values: DMatrix<f64>,
}

impl EdgePotential {
    /// `values[(i, j)]` must be finite on every admissible edge; entries on
    /// forbidden edges are ignored.
    pub fn new(spec: &SubshiftSpec, values: DMatrix<f64>) -> Result<Self> {
        let q = spec.alphabet_size();
        if values.nrows() != q || values.ncols() != q {
            return Err(Error::domain(MODULE, format!("edge potential must be {q}x{q}")));
        }
        for i in 0..q {
            for j in 0..q {
                if spec.allowed(i, j) && !values[(i, j)].is_finite() {
                    return Err(Error::domain(
                        MODULE,
                        format!("edge potential is not finite on admissible edge {i}->{j}"),
                    ));
                }
            }
        }
        Ok(Self { values })
    }

    pub fn from_fn(spec: &SubshiftSpec, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let q = spec.alphabet_size();
        Self::new(spec, DMatrix::from_fn(q, q, |i, j| if spec.allowed(i, j) { f(i, j) } else { 0.0 }))
    }

    /// A potential depending only on the current symbol.
    pub fn from_symbol_values(spec: &SubshiftSpec, values: &[f64]) -> Result<Self> {
        if values.len() != spec.alphabet_size() {
            return Err(Error::domain(MODULE, "one value per symbol expected"));
        }
        Self::from_fn(spec, |i, _| values[i])
    }

    pub fn constant(spec: &SubshiftSpec, c: f64) -> Result<Self> {
        Self::from_fn(spec, |_, _| c)
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Supremum of the `n`-th Birkhoff sum over the cylinder `[w]`, `n = |w|`:
    /// the edges inside `w` plus the best admissible continuation.
    pub fn cylinder_sum(&self, spec: &SubshiftSpec, w: &[usize]) -> f64 {
        let inner: f64 = w.windows(2).map(|p| self.values[(p[0], p[1])]).sum();
        let last = *w.last().expect("nonempty word");
        let tail = (0..spec.alphabet_size())
            .filter(|&b| spec.allowed(last, b))
            .map(|b| self.values[(last, b)])
            .fold(f64::NEG_INFINITY, f64::max);
        inner + tail
    }
}

/// Largest or smallest singular value of the bundle derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SingularKind {
    Norm,
    Conorm,
}

impl SingularKind {
    pub fn name(self) -> &'static str {
        match self {
            SingularKind::Norm => "norm",
            SingularKind::Conorm => "conorm",
        }
    }
}

/// Potential families `phi = {phi_n}` accepted by the cylinder scheme.
#[derive(Debug, Clone)]
pub enum PotentialSpec<'a> {
    Edge(EdgePotential),
    /// `phi_n(w) = sign * t * log X(A^n(w))` with `X` the norm or co-norm.
    Singular {
        cocycle: &'a MatrixCocycle,
        kind: SingularKind,
        sign: f64,
        t: f64,
    },
}

impl<'a> PotentialSpec<'a> {
    /// The dimension potential of the cocycle's bundle: `-t log X` for an
    /// unstable cocycle, `+t log X` for a stable one. Requires `t >= 0`.
    pub fn dimension(cocycle: &'a MatrixCocycle, kind: SingularKind, t: f64) -> Result<Self> {
        Self::singular(cocycle, kind, cocycle.orientation().potential_sign(), t)
    }

    pub fn singular(cocycle: &'a MatrixCocycle, kind: SingularKind, sign: f64, t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::domain(MODULE, format!("coefficient t must be finite and >= 0, got {t}")));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::domain(MODULE, "sign must be +1 or -1"));
        }
        Ok(PotentialSpec::Singular {
            cocycle,
            kind,
            sign,
            t,
        })
    }

    /// Direction in which the level-`n` cylinder pressure approaches its limit.
    pub fn convergence(&self, spec: &SubshiftSpec) -> Convergence {
        match self {
            PotentialSpec::Edge(_) => Convergence::Unspecified,
            PotentialSpec::Singular { kind, sign, t, .. } => {
                if *t == 0.0 {
                    return Convergence::FromAbove;
                }
                // sign * log||.|| is sub-additive for sign > 0, sign * log m for sign < 0
                let sub = (*sign > 0.0) == (*kind == SingularKind::Norm);
                if sub {
                    Convergence::FromAbove
                } else if spec.is_full_shift() {
                    Convergence::FromBelow
                } else {
                    Convergence::Unspecified
                }
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            PotentialSpec::Edge(_) => "edge".into(),
            PotentialSpec::Singular { kind, sign, t, .. } => {
                format!("{}{} log {}", if *sign < 0.0 { "-" } else { "+" }, t, kind.name())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    TransferMatrix,
    CylinderSum,
    Block,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::TransferMatrix => "transfer-matrix",
            Scheme::CylinderSum => "cylinder-sum",
            Scheme::Block => "block-2^k",
        }
    }
}

/// How a level-`n` approximant relates to the limiting pressure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convergence {
    /// No truncation: the value is the pressure itself.
    Exact,
    /// Sub-additive family: approximants are upper bounds.
    FromAbove,
    /// Super-additive family: approximants are lower bounds.
    FromBelow,
    Unspecified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate {
    /// Nats per iterate of the base map.
    pub value: f64,
    /// Word length behind the estimate (`2^k` for the block scheme, 0 for transfer matrices).
    pub level: usize,
    pub scheme: Scheme,
    pub convergence: Convergence,
}

/// Exact pressure of an edge potential: `log rho(A o exp(f))`.
pub fn additive_pressure(spec: &SubshiftSpec, potential: &EdgePotential) -> Result<PressureEstimate> {
    spec.require_irreducible(MODULE)?;
    let q = spec.alphabet_size();
    let log_w = DMatrix::from_fn(q, q, |i, j| {
        if spec.allowed(i, j) {
            potential.value(i, j)
        } else {
            f64::NEG_INFINITY
        }
    });
    Ok(PressureEstimate {
        value: linalg::log_spectral_radius(&log_w)?,
        level: 0,
        scheme: Scheme::TransferMatrix,
        convergence: Convergence::Exact,
    })
}

/// `phi_n` on every admissible word of length `n`, in lexicographic word order.
pub(crate) fn cylinder_potentials(
    spec: &SubshiftSpec,
    potential: &PotentialSpec<'_>,
    n: usize,
    budget: &Budget,
) -> Result<Vec<(Word, f64)>> {
    if let PotentialSpec::Singular { cocycle, .. } = potential {
        cocycle.check_alphabet(spec)?;
    }
    let words: Vec<Word> = enumerate_words(spec, n, budget)?.collect();
    words
        .into_par_iter()
        .map(|w| {
            let phi = match potential {
                PotentialSpec::Edge(e) => e.cylinder_sum(spec, w.symbols()),
                PotentialSpec::Singular {
                    cocycle,
                    kind,
                    sign,
                    t,
                } => {
                    if *t == 0.0 {
                        0.0
                    } else {
                        let s = product_stats(cocycle, &w)?;
                        let x = match kind {
                            SingularKind::Norm => s.log_norm,
                            SingularKind::Conorm => s.log_conorm,
                        };
                        sign * t * x
                    }
                }
            };
            Ok((w, phi))
        })
        .collect()
}

/// `log sum_{|w| = n} exp(phi_n(w))`, accumulated in lexicographic order.
pub fn cylinder_log_sum(
    spec: &SubshiftSpec,
    potential: &PotentialSpec<'_>,
    n: usize,
    budget: &Budget,
) -> Result<f64> {
    let terms = cylinder_potentials(spec, potential, n, budget)?;
    let mut acc = LogSumExp::new();
    for (_, phi) in &terms {
        acc.push(*phi);
    }
    let v = acc.value();
    if v.is_nan() {
        return Err(Error::numeric(MODULE, format!("cylinder sum for {} is NaN", potential.describe())));
    }
    Ok(v)
}

/// Level-`n` cylinder approximant `(1/n) log sum_{|w| = n} exp(phi_n(w))`.
pub fn cylinder_pressure_level(
    spec: &SubshiftSpec,
    potential: &PotentialSpec<'_>,
    n: usize,
    budget: &Budget,
) -> Result<PressureEstimate> {
    if n == 0 {
        return Err(Error::domain(MODULE, "cylinder level must be at least 1"));
    }
    Ok(PressureEstimate {
        value: cylinder_log_sum(spec, potential, n, budget)? / n as f64,
        level: n,
        scheme: Scheme::CylinderSum,
        convergence: potential.convergence(spec),
    })
}

/// One row of an exported pressure curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureCurveRow {
    pub t: f64,
    pub level: usize,
    pub scheme: String,
    pub value: f64,
}

impl PressureCurveRow {
    pub fn new(t: f64, est: &PressureEstimate) -> Self {
        Self {
            t,
            level: est.level,
            scheme: est.scheme.name().to_string(),
            value: est.value,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::Orientation;

    fn rot_cocycle() -> MatrixCocycle {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -8.0, 2.0, 0.0]);
        MatrixCocycle::new(Orientation::Unstable, vec![m.clone(), m]).unwrap()
    }

    #[test]
    fn additive_examples() {
        let c = 0.37;
        for q in 2..=4 {
            let spec = SubshiftSpec::full_shift(q);
            let p = additive_pressure(&spec, &EdgePotential::constant(&spec, c).unwrap()).unwrap();
            assert!((p.value - ((q as f64).ln() + c)).abs() < 1e-12);
            assert_eq!(p.convergence, Convergence::Exact);
        }
        let full = SubshiftSpec::full_shift(2);
        let pot = EdgePotential::from_symbol_values(&full, &[-(2f64.ln()), -(4f64.ln())]).unwrap();
        let p = additive_pressure(&full, &pot).unwrap();
        assert!((p.value - 0.75f64.ln()).abs() < 1e-12);
        assert!((p.value + 0.287682).abs() < 1e-6);

        let gm = SubshiftSpec::golden_mean();
        let p = additive_pressure(&gm, &EdgePotential::constant(&gm, 0.0).unwrap()).unwrap();
        assert!((p.value - crate::symbolic::topological_entropy(&gm).unwrap()).abs() < 1e-12);
        assert!((p.value - 0.481212).abs() < 1e-6);
    }

    #[test]
    fn cylinder_examples() {
        let b = Budget::default();
        let full = SubshiftSpec::full_shift(2);
        let c = -0.8;
        let pot = PotentialSpec::Edge(EdgePotential::constant(&full, c).unwrap());
        for n in 1..=10 {
            let p = cylinder_pressure_level(&full, &pot, n, &b).unwrap();
            assert!((p.value - (2f64.ln() + c)).abs() < 1e-13);
        }
        let gm = SubshiftSpec::golden_mean();
        let rot = rot_cocycle();
        let zero = PotentialSpec::dimension(&rot, SingularKind::Conorm, 0.0).unwrap();
        for n in 1..=8 {
            let p = cylinder_pressure_level(&gm, &zero, n, &b).unwrap();
            assert!((p.value - (gm.word_count(n) as f64).ln() / n as f64).abs() < 1e-13);
        }
        let conorm = PotentialSpec::dimension(&rot, SingularKind::Conorm, 1.0).unwrap();
        let p = cylinder_pressure_level(&full, &conorm, 2, &b).unwrap();
        assert!((p.value + 2f64.ln()).abs() < 1e-13);
        assert_eq!(p.convergence, Convergence::FromAbove);
    }

    #[test]
    fn negative_t_rejected() {
        let rot = rot_cocycle();
        assert!(PotentialSpec::dimension(&rot, SingularKind::Norm, -0.1).is_err());
    }

    #[test]
    fn cylinder_levels_approach_transfer_matrix() {
        // |P_n - P| <= C/n for locally constant potentials
        let gm = SubshiftSpec::golden_mean();
        let e = EdgePotential::new(&gm, DMatrix::from_row_slice(2, 2, &[0.3, -1.1, 0.7, 0.0])).unwrap();
        let exact = additive_pressure(&gm, &e).unwrap().value;
        let pot = PotentialSpec::Edge(e);
        let b = Budget::default();
        let errs: Vec<f64> = (1..=16)
            .map(|n| (cylinder_pressure_level(&gm, &pot, n, &b).unwrap().value - exact).abs() * n as f64)
            .collect();
        let c = errs.iter().copied().fold(0.0, f64::max);
        assert!(c < 3.0, "n * error grew to {c}");
        assert!(errs[15] <= c);
    }

    #[test]
    fn fekete_subadditivity_of_conorm_sums() {
        let b = Budget::default();
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.5, 2.5]);
        let r = DMatrix::from_row_slice(2, 2, &[0.0, -8.0, 2.0, 0.0]);
        let coc = MatrixCocycle::new(Orientation::Unstable, vec![d, r]).unwrap();
        for spec in [SubshiftSpec::full_shift(2), SubshiftSpec::golden_mean()] {
            for t in [0.3, 1.0] {
                let pot = PotentialSpec::dimension(&coc, SingularKind::Conorm, t).unwrap();
                let a: Vec<f64> = (0..=12)
                    .map(|n| if n == 0 { 0.0 } else { cylinder_log_sum(&spec, &pot, n, &b).unwrap() })
                    .collect();
                for m in 1..12 {
                    for n in 1..=(12 - m) {
                        assert!(a[m + n] <= a[m] + a[n] + 1e-9, "m={m} n={n}");
                    }
                }
            }
        }
        // norm sums are super-additive on the full shift
        let spec = SubshiftSpec::full_shift(2);
        let pot = PotentialSpec::dimension(&coc, SingularKind::Norm, 0.7).unwrap();
        let a: Vec<f64> = (1..=12).map(|n| cylinder_log_sum(&spec, &pot, n, &b).unwrap()).collect();
        for m in 1..12 {
            for n in 1..=(12 - m) {
                assert!(a[m + n - 1] >= a[m - 1] + a[n - 1] - 1e-9);
            }
        }
    }
}
