//! Bowen equations, bracket sequences and the dimension report.
//!
//! For each `k` the roots of the block pressures of `f^{2^k}` with the norm
//! and co-norm potentials enclose the slice dimension. The enclosures are
//! monotone in `k` and collapse exactly when the cocycle is average
//! conformal; the final interval is reported as is, never extrapolated.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{MatrixCocycle, Orientation};
use crate::error::{Error, Result};
use crate::pressure::block::{max_feasible_k, BlockTable};
use crate::pressure::SingularKind;
use crate::symbolic::{Budget, SubshiftSpec};

const MODULE: &str = "dimension";

pub const DEFAULT_ROOT_TOL: f64 = 1e-10;
/// Conformality defect at the deepest level below which a bundle counts as
/// average conformal.
pub const DEFAULT_DEFECT_TOL: f64 = 0.05;
const MAX_BRACKET_DOUBLINGS: u32 = 10;

/// A root of a strictly decreasing pressure function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowenRoot {
    pub t: f64,
    /// Final bisection interval, `P(lo) >= 0 >= P(hi)`.
    pub bracket: (f64, f64),
    pub residual: f64,
    pub provenance: String,
}

/// Solves `P(t) = 0` by bisection.
///
/// The hint is expanded geometrically (at most 2^10 times its width, never
/// below `t = 0`) until it straddles a sign change; five equally spaced
/// samples must then be strictly decreasing.
pub fn bowen_root(
    pressure_fn: impl Fn(f64) -> Result<f64>,
    bracket_hint: (f64, f64),
    tol: f64,
    provenance: impl Into<String>,
) -> Result<BowenRoot> {
    let (mut lo, mut hi) = bracket_hint;
    if !(lo >= 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::domain(MODULE, format!("invalid bracket hint ({lo}, {hi})")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(MODULE, "root tolerance must be positive"));
    }
    let mut width = hi - lo;
    let mut p_lo = pressure_fn(lo)?;
    let mut p_hi = pressure_fn(hi)?;
    let mut doublings = 0;
    while !(p_lo > 0.0 && p_hi < 0.0) {
        if p_lo == 0.0 && p_hi < 0.0 {
            break;
        }
        if doublings == MAX_BRACKET_DOUBLINGS {
            return Err(Error::domain(
                MODULE,
                format!("potential not coercive: no sign change of the pressure on [{lo}, {hi}] (P = {p_lo}, {p_hi})"),
            ));
        }
        if p_lo <= 0.0 {
            if lo == 0.0 {
                return Err(Error::domain(
                    MODULE,
                    format!("potential not coercive: pressure at t = 0 is {p_lo} <= 0"),
                ));
            }
            lo = (lo - width).max(0.0);
            p_lo = pressure_fn(lo)?;
        }
        if p_hi >= 0.0 {
            hi += width;
            p_hi = pressure_fn(hi)?;
        }
        width *= 2.0;
        doublings += 1;
    }
    let mut prev = p_lo;
    for i in 1..5 {
        let t = lo + (hi - lo) * i as f64 / 4.0;
        let p = if i == 4 { p_hi } else { pressure_fn(t)? };
        if !(p < prev) {
            return Err(Error::domain(
                MODULE,
                format!("pressure is not strictly decreasing on [{lo}, {hi}]: P({t}) = {p} after {prev}"),
            ));
        }
        prev = p;
    }
    if p_lo == 0.0 {
        return Ok(BowenRoot {
            t: lo,
            bracket: (lo, lo),
            residual: 0.0,
            provenance: provenance.into(),
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = pressure_fn(mid)?;
        if p > 0.0 {
            lo = mid;
        } else if p < 0.0 {
            hi = mid;
        } else {
            return Ok(BowenRoot {
                t: mid,
                bracket: (mid, mid),
                residual: 0.0,
                provenance: provenance.into(),
            });
        }
    }
    let t = 0.5 * (lo + hi);
    Ok(BowenRoot {
        t,
        bracket: (lo, hi),
        residual: pressure_fn(t)?.abs(),
        provenance: provenance.into(),
    })
}

/// One level of the bracket table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketRow {
    pub k: u32,
    pub block_len: usize,
    /// Root for the smaller potential (norm for unstable, co-norm for stable bundles).
    pub lower: BowenRoot,
    pub upper: BowenRoot,
    /// Conformality defect of the `2^k`-blocks.
    pub defect: f64,
}

impl BracketRow {
    pub fn gap(&self) -> f64 {
        self.upper.t - self.lower.t
    }
}

/// `(k, lower_k, upper_k)` for `k = 0..=k_max`.
///
/// For an unstable cocycle `lower_k` solves `P(f^{2^k}, -t log||.||) = 0` and
/// `upper_k` solves `P(f^{2^k}, -t log m(.)) = 0`; for a stable cocycle the
/// potentials are `+t log m` and `+t log||.||`.
pub fn bracket_sequence(
    spec: &SubshiftSpec,
    cocycle: &MatrixCocycle,
    k_max: u32,
    tol: f64,
    budget: &Budget,
) -> Result<Vec<BracketRow>> {
    let (lower_kind, upper_kind) = match cocycle.orientation() {
        Orientation::Unstable => (SingularKind::Norm, SingularKind::Conorm),
        Orientation::Stable => (SingularKind::Conorm, SingularKind::Norm),
    };
    let hint = (0.0, 2.0 * cocycle.dim() as f64);
    (0..=k_max)
        .map(|k| {
            let table = BlockTable::build(spec, cocycle, k, budget)?;
            let solve = |kind: SingularKind| {
                bowen_root(
                    |t| table.pressure(t, kind).map(|p| p.value),
                    hint,
                    tol,
                    format!("block-2^k k={k} {} {} potential", cocycle.orientation(), kind.name()),
                )
            };
            Ok(BracketRow {
                k,
                block_len: table.block_len(),
                lower: solve(lower_kind)?,
                upper: solve(upper_kind)?,
                defect: table.defect(),
            })
        })
        .collect()
}

/// Checks `lower_k <= upper_k`, `lower_k` nondecreasing and `upper_k`
/// nonincreasing, each up to `slack`. Returns the violations found.
pub fn bracket_violations(rows: &[BracketRow], slack: f64) -> Vec<String> {
    let mut out = Vec::new();
    for r in rows {
        if r.lower.t > r.upper.t + slack {
            out.push(format!("k={}: lower root {} exceeds upper root {}", r.k, r.lower.t, r.upper.t));
        }
    }
    for w in rows.windows(2) {
        if w[1].lower.t < w[0].lower.t - slack {
            out.push(format!("lower roots decrease from k={} to k={}", w[0].k, w[1].k));
        }
        if w[1].upper.t > w[0].upper.t + slack {
            out.push(format!("upper roots increase from k={} to k={}", w[0].k, w[1].k));
        }
    }
    out
}

/// Conformality defect of a bundle at the deepest block level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectCertificate {
    pub level: usize,
    pub defect: f64,
    pub tolerance: f64,
    pub average_conformal: bool,
    /// `(n, n * defect(n))` for every block level; bounded for average conformal cocycles.
    pub scaled_defects: Vec<(usize, f64)>,
}

impl DefectCertificate {
    fn from_rows(rows: &[BracketRow], tolerance: f64) -> Self {
        let last = rows.last().expect("bracket table is never empty");
        Self {
            level: last.block_len,
            defect: last.defect,
            tolerance,
            average_conformal: last.defect <= tolerance,
            scaled_defects: rows.iter().map(|r| (r.block_len, r.block_len as f64 * r.defect)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionOptions {
    /// Deepest block level; `None` picks the largest level the budget allows.
    pub k_max: Option<u32>,
    pub tol: f64,
    pub defect_tolerance: f64,
    pub budget: Budget,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        Self {
            k_max: None,
            tol: DEFAULT_ROOT_TOL,
            defect_tolerance: DEFAULT_DEFECT_TOL,
            budget: Budget::default(),
        }
    }
}

impl DimensionOptions {
    pub fn with_k_max(mut self, k: u32) -> Self {
        self.k_max = Some(k);
        self
    }

    fn resolve_k(&self, spec: &SubshiftSpec) -> Result<u32> {
        match self.k_max {
            Some(k) => Ok(k),
            None => max_feasible_k(spec, &self.budget)
                .ok_or_else(|| Error::resource(MODULE, "not even single symbols fit in the budget", self.budget.max_words)),
        }
    }
}

/// Independent geometric estimate attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCountReference {
    pub slope: f64,
    pub standard_error: f64,
    pub r_squared: f64,
    pub points: usize,
    pub scales: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub t_u: BowenRoot,
    pub t_s: BowenRoot,
    pub dim_total: f64,
    pub unstable_brackets: Vec<BracketRow>,
    /// Brackets of the inverse cocycle over the reversed coding.
    pub stable_brackets: Vec<BracketRow>,
    pub unstable_interval: (f64, f64),
    pub stable_interval: (f64, f64),
    pub defect_unstable: DefectCertificate,
    pub defect_stable: DefectCertificate,
    pub certified: bool,
    pub flags: Vec<String>,
    pub box_count_ref: Option<BoxCountReference>,
    pub k_max: u32,
    pub tol: f64,
    pub max_words: u128,
}

/// Dimension of the hyperbolic set coded by `spec` with the given bundle
/// cocycles: `t_u + t_s`.
///
/// `t_u` is the co-norm root at the deepest level (the Bowen equation for
/// `-t log m(Df^n|E^u)`); `t_s` comes from the same machinery applied to the
/// inverse of the stable cocycle over the reversed coding, whose co-norm
/// potential is `+t log||Df^n|E^s||`. Models failing the hyperbolicity or
/// conformality checks still get a report, flagged and marked uncertified.
pub fn dimension_report(
    spec: &SubshiftSpec,
    unstable: &MatrixCocycle,
    stable: &MatrixCocycle,
    options: &DimensionOptions,
) -> Result<DimensionReport> {
    spec.require_irreducible(MODULE)?;
    if unstable.orientation() != Orientation::Unstable || stable.orientation() != Orientation::Stable {
        return Err(Error::domain(MODULE, "expected an unstable and a stable cocycle, in that order"));
    }
    let k_max = options.resolve_k(spec)?;
    let mut flags = Vec::new();
    let mut certified = true;
    for (name, c) in [("unstable", unstable), ("stable", stable)] {
        if let Err(e) = c.check_hyperbolicity(spec, &options.budget) {
            certified = false;
            flags.push(format!("uncertified: {name} bundle: {e}"));
        }
    }
    let reversed = spec.reversed();
    let inverse = stable.inverse();
    let (u_rows, s_rows) = rayon::join(
        || bracket_sequence(spec, unstable, k_max, options.tol, &options.budget),
        || bracket_sequence(&reversed, &inverse, k_max, options.tol, &options.budget),
    );
    let (u_rows, s_rows) = (u_rows?, s_rows?);
    for (name, rows) in [("unstable", &u_rows), ("stable", &s_rows)] {
        for v in bracket_violations(rows, 2.0 * options.tol) {
            flags.push(format!("{name} brackets: {v}"));
        }
    }
    let defect_u = DefectCertificate::from_rows(&u_rows, options.defect_tolerance);
    let defect_s = DefectCertificate::from_rows(&s_rows, options.defect_tolerance);
    for (name, d) in [("unstable", &defect_u), ("stable", &defect_s)] {
        if !d.average_conformal {
            certified = false;
            flags.push(format!(
                "not average conformal on the {name} bundle: defect {:.6} at level {} exceeds {}",
                d.defect, d.level, d.tolerance
            ));
        }
    }
    let u_last = u_rows.last().unwrap();
    let s_last = s_rows.last().unwrap();
    let t_u = u_last.upper.clone();
    let mut t_s = s_last.upper.clone();
    t_s.provenance = format!("stable bundle as inverse over reversed coding: {}", t_s.provenance);
    Ok(DimensionReport {
        dim_total: t_u.t + t_s.t,
        unstable_interval: (u_last.lower.t, u_last.upper.t),
        stable_interval: (s_last.lower.t, s_last.upper.t),
        t_u,
        t_s,
        unstable_brackets: u_rows,
        stable_brackets: s_rows,
        defect_unstable: defect_u,
        defect_stable: defect_s,
        certified,
        flags,
        box_count_ref: None,
        k_max,
        tol: options.tol,
        max_words: options.budget.max_words,
    })
}

/// A model in a parameterised family, as consumed by [`continuity_sweep`].
pub struct ModelData {
    pub spec: SubshiftSpec,
    pub unstable: MatrixCocycle,
    pub stable: MatrixCocycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub parameter: f64,
    pub dim_total: Option<f64>,
    pub certified: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Largest `|dim(p_{i+1}) - dim(p_i)|` over adjacent successful points.
    pub max_adjacent_jump: f64,
    pub monotone_decreasing: bool,
    pub monotone_increasing: bool,
}

/// Dimension along a parameter grid. Points are evaluated in parallel and
/// reported in grid order; failures are recorded and the sweep continues.
pub fn continuity_sweep<F>(family: F, grid: &[f64], options: &DimensionOptions) -> SweepResult
where
    F: Fn(f64) -> Result<ModelData> + Sync,
{
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .map(|&p| match family(p).and_then(|m| dimension_report(&m.spec, &m.unstable, &m.stable, options)) {
            Ok(r) => SweepPoint {
                parameter: p,
                dim_total: Some(r.dim_total),
                certified: r.certified,
                error: None,
            },
            Err(e) => SweepPoint {
                parameter: p,
                dim_total: None,
                certified: false,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let dims: Vec<f64> = points.iter().filter_map(|p| p.dim_total).collect();
    let max_adjacent_jump = dims.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    SweepResult {
        max_adjacent_jump,
        monotone_decreasing: dims.windows(2).all(|w| w[1] < w[0]),
        monotone_increasing: dims.windows(2).all(|w| w[1] > w[0]),
        points,
    }
}

/// `start, start + step, ..., stop` with the count rounded to absorb float drift.
pub fn parameter_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(Error::domain(MODULE, format!("bad grid start={start} stop={stop} step={step}")));
    }
    let n = ((stop - start) / step).round() as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn rot() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -8.0, 2.0, 0.0])
    }

    #[test]
    fn linear_root() {
        let r = bowen_root(|t| Ok(2f64.ln() - t * 4f64.ln()), (0.0, 4.0), 1e-12, "linear").unwrap();
        assert!((r.t - 0.5).abs() < 1e-12);
        let r = bowen_root(|t| Ok(2f64.ln() - t * 0.5 * 16f64.ln()), (0.0, 4.0), 1e-12, "block").unwrap();
        assert!((r.t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn golden_root() {
        let r = bowen_root(|t| Ok((2f64.powf(-t) + 4f64.powf(-t)).ln()), (0.0, 2.0), 1e-12, "golden").unwrap();
        let expected = ((1.0 + 5f64.sqrt()) / 2.0).ln() / 2f64.ln();
        assert!((r.t - expected).abs() < 1e-11);
        assert!((r.t - 0.694242).abs() < 1e-6);
        // plug back: s + s^2 = 1 with s = 2^-t
        let s = 2f64.powf(-r.t);
        assert!((s + s * s - 1.0).abs() < 1e-11);
    }

    #[test]
    fn hint_is_expanded() {
        let r = bowen_root(|t| Ok(10.0 - t), (0.0, 1.0), 1e-10, "far").unwrap();
        assert!((r.t - 10.0).abs() < 1e-9);
        let r = bowen_root(|t| Ok(0.5 - t), (2.0, 3.0), 1e-10, "left").unwrap();
        assert!((r.t - 0.5).abs() < 1e-9);
    }

    #[test]
    fn non_coercive_and_non_monotone_rejected() {
        let e = bowen_root(|_| Ok(1.0), (0.0, 1.0), 1e-10, "const").unwrap_err();
        assert!(e.to_string().contains("not coercive"));
        let e = bowen_root(|t| Ok(1.0 - t + 0.8 * (4.0 * t).sin()), (0.0, 2.0), 1e-10, "wiggle");
        assert!(matches!(e, Err(Error::Domain { .. })));
    }

    #[test]
    fn root_uniqueness_surrogate() {
        let f = |t: f64| -> Result<f64> { Ok((2f64.powf(-t) + 4f64.powf(-t)).ln()) };
        let tol = 1e-10;
        let r = bowen_root(f, (0.0, 2.0), tol, "golden").unwrap();
        assert!(f(r.t - 10.0 * tol).unwrap() > 0.0);
        assert!(f(r.t + 10.0 * tol).unwrap() < 0.0);
    }

    #[test]
    fn scalar_brackets_collapse() {
        let full = SubshiftSpec::full_shift(2);
        let c = MatrixCocycle::scalar(Orientation::Unstable, 2, &[4.0, 4.0]).unwrap();
        let rows = bracket_sequence(&full, &c, 4, 1e-10, &Budget::default()).unwrap();
        for r in &rows {
            assert!((r.lower.t - 0.5).abs() < 2e-10 && (r.upper.t - 0.5).abs() < 2e-10);
        }
        assert!(bracket_violations(&rows, 2e-10).is_empty());
    }

    #[test]
    fn rotated_diagonal_brackets() {
        let full = SubshiftSpec::full_shift(2);
        let c = MatrixCocycle::new(Orientation::Unstable, vec![rot(), rot()]).unwrap();
        let rows = bracket_sequence(&full, &c, 3, 1e-11, &Budget::default()).unwrap();
        assert!((rows[0].lower.t - 1.0 / 3.0).abs() < 1e-9);
        assert!((rows[0].upper.t - 1.0).abs() < 1e-9);
        for r in &rows[1..] {
            assert!((r.lower.t - 0.5).abs() < 1e-9 && (r.upper.t - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn stable_duality() {
        // direct stable brackets vs the inverse cocycle on the reversed coding
        let gm = SubshiftSpec::golden_mean();
        let a = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.05, 0.2]);
        let b = DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.15, 0.25]);
        let st = MatrixCocycle::new(Orientation::Stable, vec![a, b]).unwrap();
        let budget = Budget::default();
        let direct = bracket_sequence(&gm, &st, 3, 1e-12, &budget).unwrap();
        let via_inverse = bracket_sequence(&gm.reversed(), &st.inverse(), 3, 1e-12, &budget).unwrap();
        for (d, i) in direct.iter().zip(&via_inverse) {
            assert!((d.upper.t - i.upper.t).abs() < 1e-9, "k={}", d.k);
            assert!((d.lower.t - i.lower.t).abs() < 1e-9, "k={}", d.k);
        }
    }

    #[test]
    fn report_for_linear_horseshoes() {
        let full = SubshiftSpec::full_shift(2);
        let opts = DimensionOptions::default().with_k_max(3);
        let u = MatrixCocycle::scalar(Orientation::Unstable, 1, &[4.0, 4.0]).unwrap();
        let s = MatrixCocycle::scalar(Orientation::Stable, 1, &[0.25, 0.25]).unwrap();
        let r = dimension_report(&full, &u, &s, &opts).unwrap();
        assert!((r.dim_total - 1.0).abs() < 1e-9);
        assert!(r.certified, "{:?}", r.flags);

        let u = MatrixCocycle::scalar(Orientation::Unstable, 1, &[3.0, 3.0]).unwrap();
        let s = MatrixCocycle::scalar(Orientation::Stable, 1, &[0.2, 0.2]).unwrap();
        let r = dimension_report(&full, &u, &s, &opts).unwrap();
        assert!((r.t_u.t - 0.630930).abs() < 1e-6);
        assert!((r.t_s.t - 0.430677).abs() < 1e-6);
        assert!((r.dim_total - (2f64.ln() / 3f64.ln() + 2f64.ln() / 5f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn report_for_rotated_unstable_bundle() {
        let full = SubshiftSpec::full_shift(2);
        let u = MatrixCocycle::new(Orientation::Unstable, vec![rot(), rot()]).unwrap();
        let s = MatrixCocycle::scalar(Orientation::Stable, 1, &[0.25, 0.25]).unwrap();
        let r = dimension_report(&full, &u, &s, &DimensionOptions::default().with_k_max(3)).unwrap();
        assert!((r.t_u.t - 0.5).abs() < 1e-9);
        assert!((r.t_s.t - 0.5).abs() < 1e-9);
        assert!((r.dim_total - 1.0).abs() < 1e-9);
        assert!(r.certified);
    }

    #[test]
    fn non_conformal_report_is_flagged() {
        let full = SubshiftSpec::full_shift(2);
        let u = MatrixCocycle::new(
            Orientation::Unstable,
            vec![
                DMatrix::from_diagonal(&nalgebra::dvector![3.0, 4.0]),
                DMatrix::from_diagonal(&nalgebra::dvector![4.0, 3.0]),
            ],
        )
        .unwrap();
        let s = MatrixCocycle::scalar(Orientation::Stable, 1, &[0.25, 0.25]).unwrap();
        let r = dimension_report(&full, &u, &s, &DimensionOptions::default().with_k_max(2)).unwrap();
        assert!(!r.certified);
        assert!(!r.defect_unstable.average_conformal);
        assert!(r.flags.iter().any(|f| f.contains("not average conformal")));
    }

    #[test]
    fn sweep_examples() {
        let opts = DimensionOptions::default().with_k_max(2);
        let family = |mu: f64| -> Result<ModelData> {
            Ok(ModelData {
                spec: SubshiftSpec::full_shift(2),
                unstable: MatrixCocycle::scalar(Orientation::Unstable, 1, &[mu, mu])?,
                stable: MatrixCocycle::scalar(Orientation::Stable, 1, &[1.0 / mu, 1.0 / mu])?,
            })
        };
        let r = continuity_sweep(family, &[3.0, 4.0], &opts);
        assert!((r.points[0].dim_total.unwrap() - 2.0 * 2f64.ln() / 3f64.ln()).abs() < 1e-9);
        assert!((r.points[0].dim_total.unwrap() - 1.26186).abs() < 1e-5);
        assert!((r.points[1].dim_total.unwrap() - 1.0).abs() < 1e-9);

        let constant = |_p: f64| family(4.0);
        let r = continuity_sweep(constant, &[0.0, 1.0, 2.0], &opts);
        assert!(r.max_adjacent_jump < 1e-12);

        // failures are recorded, not fatal
        let r = continuity_sweep(family, &[0.5, 3.0], &opts);
        assert!(r.points[0].error.is_some());
        assert!(r.points[1].dim_total.is_some());
    }

    #[test]
    fn grid_has_expected_length() {
        let g = parameter_grid(3.0, 5.0, 0.05).unwrap();
        assert_eq!(g.len(), 41);
        assert!((g[40] - 5.0).abs() < 1e-12);
    }
}
