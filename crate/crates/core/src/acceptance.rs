//! The acceptance suite: closed-form oracles, the geometric check of the
//! dimension formula, the variational principle, continuity, Hölder
//! conjugacy and the property suites. Every tolerance is a named constant.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cocycle::{conformality_defect, product_stats_raw, MatrixCocycle, Orientation};
use crate::dimension::{
    bowen_root, bracket_sequence, continuity_sweep, dimension_report, parameter_grid, DimensionOptions, ModelData,
};
use crate::error::Result;
use crate::geometry::{
    auto_dyadic_scales, balanced_depths, box_count, holder_exponent_fit, sample_product, sample_stable_slice,
    sample_unstable_slice, BoxCountResult, HorseshoeModel,
};
use crate::pressure::{
    additive_pressure, block_pressure, cylinder_pressure_level, free_energy, variational_gap, EdgePotential,
    PotentialSpec, SingularKind, VariationalOptions,
};
use crate::symbolic::{topological_entropy, Budget, MarkovMeasure, SubshiftSpec, Word};

pub const C1_TOL_HALF: f64 = 1e-9;
pub const C1_TOL_GOLDEN: f64 = 1e-8;
pub const C1_RUNTIME_EACH: f64 = 1.0;
pub const C2_TOL: f64 = 1e-10;
pub const C2_RUNTIME: f64 = 1.0;
pub const C3_TOL_ROOT: f64 = 1e-8;
pub const C3_TOL_DEFECT: f64 = 1e-12;
pub const C3_K_MAX: u32 = 4;
pub const C3_RUNTIME: f64 = 5.0;
pub const C4_DEFECT_SLACK: f64 = 1e-9;
pub const C4_MAX_N: usize = 12;
pub const C4_K: u32 = 4;
pub const C4_MIN_GAP: f64 = 0.05;
pub const C4_RUNTIME: f64 = 30.0;
pub const C5_TOL_DIM: f64 = 1e-8;
pub const C5_MIN_POINTS: usize = 100_000;
pub const C5_MIN_SCALES: usize = 6;
pub const C5_TOL_BOX: f64 = 0.05;
pub const C5_TOL_SLICE: f64 = 0.03;
pub const C5_SLICE_SE_FACTOR: f64 = 2.0;
pub const C5_UNSTABLE_SLICE_DEPTH: usize = 16;
pub const C5_STABLE_SLICE_DEPTH: usize = 12;
pub const C5_RUNTIME: f64 = 60.0;
pub const C6_TOL_GAP: f64 = 1e-4;
pub const C6_TOL_INEQ: f64 = 1e-9;
pub const C6_MEASURES: usize = 1000;
pub const C6_SINGULAR_DEPTH: usize = 8;
pub const C6_RUNTIME: f64 = 30.0;
pub const C7_MAX_JUMP: f64 = 0.02;
pub const C7_RUNTIME: f64 = 60.0;
pub const C8_TOL_PAIR: f64 = 0.03;
pub const C8_TOL_IDENTITY: f64 = 0.01;
pub const C8_DEPTH: usize = 20;
pub const C8_PAIRS: usize = 2000;
pub const C8_RUNTIME: f64 = 30.0;
pub const C9_PAIRS: usize = 10_000;
pub const C9_SLACK: f64 = 1e-10;
pub const C9_GRID: usize = 50;
pub const C9_RUNTIME: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub description: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: String,
    pub checks: Vec<Check>,
    pub elapsed_secs: f64,
    pub runtime_limit_secs: f64,
    pub passed: bool,
}

impl CriterionOutcome {
    /// One line: id, verdict, runtime and the failing checks if any.
    pub fn summary_line(&self) -> String {
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.description.as_str()).collect();
        format!(
            "criterion {} [{}] {} ({:.2}s of {}s){}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.elapsed_secs,
            self.runtime_limit_secs,
            if failed.is_empty() { String::new() } else { format!(": {}", failed.join("; ")) }
        )
    }
}

struct Recorder {
    checks: Vec<Check>,
}

impl Recorder {
    fn new() -> Self {
        Self { checks: Vec::new() }
    }

    fn check(&mut self, passed: bool, description: impl Into<String>) {
        self.checks.push(Check {
            description: description.into(),
            passed,
        });
    }

    fn near(&mut self, what: &str, value: f64, target: f64, tol: f64) {
        self.check((value - target).abs() <= tol, format!("{what} = {value:.12} vs {target:.12} (tol {tol:e})"));
    }

    /// Records an error as a failed check instead of aborting the criterion.
    fn ok<T>(&mut self, what: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.check(false, format!("{what}: {e}"));
                None
            }
        }
    }
}

fn finish(id: u8, title: &str, rec: Recorder, start: Instant, limit: f64) -> CriterionOutcome {
    let elapsed = start.elapsed().as_secs_f64();
    let mut checks = rec.checks;
    checks.push(Check {
        description: format!("runtime {elapsed:.3}s < {limit}s"),
        passed: elapsed < limit,
    });
    CriterionOutcome {
        id,
        title: title.to_string(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        elapsed_secs: elapsed,
        runtime_limit_secs: limit,
    }
}

fn golden_ratio() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

fn rot_diag() -> DMatrix<f64> {
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
    .expect("diagonal generators are valid")
}

/// Root of the level-0 conorm pressure of a scalar cocycle on the full 2-shift.
fn scalar_root(factors: &[f64]) -> Result<f64> {
    let full = SubshiftSpec::full_shift(2);
    let c = MatrixCocycle::scalar(Orientation::Unstable, 1, factors)?;
    let budget = Budget::default();
    bowen_root(
        |t| block_pressure(&full, &c, t, 0, SingularKind::Conorm, &budget).map(|p| p.value),
        (0.0, 2.0),
        1e-12,
        "scalar cocycle",
    )
    .map(|r| r.t)
}

pub fn criterion_1() -> CriterionOutcome {
    let start = Instant::now();
    let mut rec = Recorder::new();
    let t0 = Instant::now();
    if let Some(t) = rec.ok("constant expansion 4", scalar_root(&[4.0, 4.0])) {
        rec.near("root for constant expansion 4", t, 0.5, C1_TOL_HALF);
    }
    let e = t0.elapsed().as_secs_f64();
    rec.check(e < C1_RUNTIME_EACH, format!("first root took {e:.3}s"));
    let t1 = Instant::now();
    if let Some(t) = rec.ok("expansions (2,4)", scalar_root(&[2.0, 4.0])) {
        rec.near("root for expansions (2,4)", t, golden_ratio().ln() / 2f64.ln(), C1_TOL_GOLDEN);
    }
    let e = t1.elapsed().as_secs_f64();
    rec.check(e < C1_RUNTIME_EACH, format!("second root took {e:.3}s"));
    finish(1, "closed-form Bowen roots", rec, start, 2.0 * C1_RUNTIME_EACH)
}

pub fn criterion_2() -> CriterionOutcome {
    let start = Instant::now();
    let mut rec = Recorder::new();
    if let Some(h) = rec.ok("full shift entropy", topological_entropy(&SubshiftSpec::full_shift(2))) {
        rec.near("entropy of the full 2-shift", h, 2f64.ln(), C2_TOL);
    }
    if let Some(h) = rec.ok("golden-mean entropy", topological_entropy(&SubshiftSpec::golden_mean())) {
        rec.near("entropy of the golden-mean shift", h, golden_ratio().ln(), C2_TOL);
    }
    finish(2, "entropy oracles", rec, start, C2_RUNTIME)
}

pub fn criterion_3() -> CriterionOutcome {
    let start = Instant::now();
    let mut rec = Recorder::new();
    let full = SubshiftSpec::full_shift(2);
    let budget = Budget::default();
    let c = MatrixCocycle::new(Orientation::Unstable, vec![rot_diag(), rot_diag()]).expect("valid generators");
    if let Some(rows) = rec.ok("bracket table", bracket_sequence(&full, &c, C3_K_MAX, 1e-11, &budget)) {
        rec.near("lower root at k=0", rows[0].lower.t, 1.0 / 3.0, C3_TOL_ROOT);
        rec.near("upper root at k=0", rows[0].upper.t, 1.0, C3_TOL_ROOT);
        for r in &rows[1..] {
            rec.near(&format!("lower root at k={}", r.k), r.lower.t, 0.5, C3_TOL_ROOT);
            rec.near(&format!("upper root at k={}", r.k), r.upper.t, 0.5, C3_TOL_ROOT);
        }
    }
    for k in 1..=6 {
        if let Some(d) = rec.ok("defect", conformality_defect(&c, &full, 2 * k, &budget)) {
            rec.check(d <= C3_TOL_DEFECT, format!("defect at n={} is {d:e}", 2 * k));
        }
    }
    finish(3, "average conformal, non-conformal cocycle", rec, start, C3_RUNTIME)
}

pub fn criterion_4() -> CriterionOutcome {
    let start = Instant::now();
    let mut rec = Recorder::new();
    let full = SubshiftSpec::full_shift(2);
    let budget = Budget::default();
    let c = diag34();
    let floor = (4.0f64 / 3.0).ln() - C4_DEFECT_SLACK;
    for n in 1..=C4_MAX_N {
        if let Some(d) = rec.ok("defect", conformality_defect(&c, &full, n, &budget)) {
            rec.check(d >= floor, format!("defect at n={n} is {d:.12} (floor {floor:.12})"));
        }
    }
    let stable = MatrixCocycle::scalar(Orientation::Stable, 1, &[0.25, 0.25]).expect("valid generators");
    let opts = DimensionOptions::default().with_k_max(C4_K);
    if let Some(r) = rec.ok("dimension report", dimension_report(&full, &c, &stable, &opts)) {
        let row = &r.unstable_brackets[C4_K as usize];
        rec.check(
            row.gap() > C4_MIN_GAP,
            format!(
                "bracket gap at k={} is {:.6} = {:.6} - {:.6}, must exceed {C4_MIN_GAP}",
                row.k,
                row.gap(),
                row.upper.t,
                row.lower.t
            ),
        );
        rec.check(
            r.flags.iter().any(|f| f.contains("not average conformal")),
            "report flags the unstable bundle as not average conformal",
        );
    }
    finish(4, "negative detector", rec, start, C4_RUNTIME)
}

fn slice_agreement(rec: &mut Recorder, what: &str, fits: &[BoxCountResult]) {
    for i in 0..fits.len() {
        for j in i + 1..fits.len() {
            let diff = (fits[i].slope - fits[j].slope).abs();
            let bound = C5_SLICE_SE_FACTOR * fits[i].standard_error.max(fits[j].standard_error);
            rec.check(diff <= bound, format!("{what} slices {i},{j} differ by {diff:.6} (bound {bound:.6})"));
        }
    }
}

pub fn criterion_5(seed: u64) -> CriterionOutcome {
    let start = Instant::now();
    let mut rec = Recorder::new();
    let budget = Budget::default();
    let model = HorseshoeModel::linear(2, 3.0, 0.2).expect("valid horseshoe");
    let closed = 2f64.ln() / 3f64.ln() + 2f64.ln() / 5f64.ln();
    let (u, s) = (model.unstable_cocycle().expect("cocycle"), model.stable_cocycle().expect("cocycle"));
    let Some(report) = rec.ok(
        "dimension report",
        dimension_report(model.coding(), &u, &s, &DimensionOptions::default()),
    ) else {
        return finish(5, "dimension formula, geometric check", rec, start, C5_RUNTIME);
    };
    rec.near("dim report", report.dim_total, closed, C5_TOL_DIM);

    let full = balanced_depths(&model, &budget)
        .and_then(|(nf, nb)| sample_product(&model, nf, nb, Some(seed), &budget))
        .and_then(|cloud| {
            let scales = auto_dyadic_scales(&cloud)?;
            Ok((cloud.len(), box_count(&cloud, &scales)?))
        });
    if let Some((n, bc)) = rec.ok("box count of the invariant set", full) {
        rec.check(n >= C5_MIN_POINTS, format!("{n} sampled points"));
        rec.check(bc.scales.len() >= C5_MIN_SCALES, format!("{} dyadic scales", bc.scales.len()));
        rec.near("box-count slope of the invariant set", bc.slope, report.dim_total, C5_TOL_BOX);
    }

    let words = [vec![0], vec![1, 0], vec![1, 1, 1]];
    let mut unstable = Vec::new();
    let mut stable = Vec::new();
    for (i, w) in words.iter().enumerate() {
        let w = Word::new(model.coding(), w.clone()).expect("full shift word");
        let su = sample_unstable_slice(&model, &w, C5_UNSTABLE_SLICE_DEPTH, Some(seed + i as u64), &budget)
            .and_then(|c| box_count(&c, &auto_dyadic_scales(&c)?));
        if let Some(r) = rec.ok("unstable slice", su) {
            rec.near(&format!("unstable slice slope (past {w})"), r.slope, 2f64.ln() / 3f64.ln(), C5_TOL_SLICE);
            unstable.push(r);
        }
        let ss = sample_stable_slice(&model, &w, C5_STABLE_SLICE_DEPTH, Some(seed + i as u64), &budget)
            .and_then(|c| box_count(&c, &auto_dyadic_scales(&c)?));
        if let Some(r) = rec.ok("stable slice", ss) {
            rec.near(&format!("stable slice slope (future {w})"), r.slope, 2f64.ln() / 5f64.ln(), C5_TOL_SLICE);
            stable.push(r);
        }
    }
    slice_agreement(&mut rec, "unstable", &unstable);
    slice_agreement(&mut rec, "stable", &stable);
    finish(5, "dimension formula, geometric check", rec, start, C5_RUNTIME)
}

fn random_edge_potential(spec: &SubshiftSpec, rng: &mut ChaCha8Rng) -> EdgePotential {
    let q = spec.alphabet_size();
    let vals: Vec<f64> = (0..q * q).map(|_| rng.random_range(-1.0..1.0)).collect();
    EdgePotential::from_fn(spec, |i, j| vals[i * q + j]).expect("finite values")
}

pub fn criterion_6(seed: u64) -> CriterionOutcome {
    let start = Instant::now();
    let mut rec = Recorder::new();
    let budget = Budget::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = VariationalOptions {
        seed,
        ..VariationalOptions::default()
    };
    for (name, spec) in [("full 2-shift", SubshiftSpec::full_shift(2)), ("golden mean", SubshiftSpec::golden_mean())] {
        let pot = random_edge_potential(&spec, &mut rng);
        let p = additive_pressure(&spec, &pot).map(|e| e.value);
        let Some(p) = rec.ok("pressure", p) else { continue };
        let pspec = PotentialSpec::Edge(pot.clone());
        if let Some(v) = rec.ok("optimizer", variational_gap(&spec, &pspec, 1, 1, &opts, &budget)) {
            rec.check(
                v.gap <= C6_TOL_GAP && v.gap >= -C6_TOL_INEQ,
                format!("{name}: optimizer gap {:e} (tol {C6_TOL_GAP:e})", v.gap),
            );
        }
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..C6_MEASURES {
            let m = MarkovMeasure::random(&spec, &mut rng).and_then(|m| free_energy(&spec, &m, &pspec, 1, &budget));
            if let Some(fe) = rec.ok("free energy", m) {
                worst = worst.max(fe - p);
            }
        }
        rec.check(worst <= C6_TOL_INEQ, format!("{name}: max h + int phi - P over {C6_MEASURES} measures is {worst:e}"));
    }
    let full = SubshiftSpec::full_shift(2);
    let c = diag34();
    if let Some(pspec) = rec.ok("singular potential", PotentialSpec::dimension(&c, SingularKind::Conorm, 0.8)) {
        let pref = cylinder_pressure_level(&full, &pspec, C6_SINGULAR_DEPTH, &budget).map(|e| e.value);
        if let Some(pref) = rec.ok("cylinder pressure", pref) {
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..C6_MEASURES {
                let m = MarkovMeasure::random(&full, &mut rng)
                    .and_then(|m| free_energy(&full, &m, &pspec, C6_SINGULAR_DEPTH, &budget));
                if let Some(fe) = rec.ok("free energy", m) {
                    worst = worst.max(fe - pref);
                }
            }
            rec.check(
                worst <= C6_TOL_INEQ,
                format!("singular conorm potential: max h + Phi_* - P over {C6_MEASURES} measures is {worst:e}"),
            );
        }
    }
    finish(6, "variational principle", rec, start, C6_RUNTIME)
}

/// Linear horseshoes `mu in [3, 5]`, `lambda = 1/5` as model data.
pub fn linear_family(mu: f64) -> Result<ModelData> {
    let m = HorseshoeModel::linear(2, mu, 0.2)?;
    Ok(ModelData {
        spec: m.coding().clone(),
        unstable: m.unstable_cocycle()?,
        stable: m.stable_cocycle()?,
    })
}

pub fn criterion_7() -> CriterionOutcome {
    let start = Instant::now();
    let mut rec = Recorder::new();
    let grid = parameter_grid(3.0, 5.0, 0.05).expect("valid grid");
    let sweep = continuity_sweep(linear_family, &grid, &DimensionOptions::default().with_k_max(2));
    let failed = sweep.points.iter().filter(|p| p.dim_total.is_none()).count();
    rec.check(failed == 0 && sweep.points.len() == 41, format!("{} grid points, {failed} failed", sweep.points.len()));
    rec.check(
        sweep.max_adjacent_jump <= C7_MAX_JUMP,
        format!("max adjacent jump {:.6} (limit {C7_MAX_JUMP})", sweep.max_adjacent_jump),
    );
    rec.check(sweep.monotone_decreasing, "dimension strictly decreasing in mu");
    finish(7, "continuity sweep", rec, start, C7_RUNTIME)
}

pub fn criterion_8(seed: u64) -> CriterionOutcome {
    let start = Instant::now();
    let mut rec = Recorder::new();
    let a = HorseshoeModel::linear(2, 3.0, 0.2).expect("valid horseshoe");
    let b = HorseshoeModel::linear(2, 3.3, 0.2).expect("valid horseshoe");
    if let Some(f) = rec.ok("fit", holder_exponent_fit(&a, &b, C8_DEPTH, C8_PAIRS, seed)) {
        rec.near("exponent for mu = 3, 3.3", f.r_lower, 3f64.ln() / 3.3f64.ln(), C8_TOL_PAIR);
    }
    if let Some(f) = rec.ok("fit", holder_exponent_fit(&a, &a, C8_DEPTH, C8_PAIRS, seed)) {
        rec.near("exponent for identical models", f.r_lower, 1.0, C8_TOL_IDENTITY);
    }
    finish(8, "Hölder conjugacy", rec, start, C8_RUNTIME)
}

fn random_word(spec: &SubshiftSpec, len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let q = spec.alphabet_size();
    let mut w = vec![rng.random_range(0..q)];
    while w.len() < len {
        let next: Vec<usize> = (0..q).filter(|&t| spec.allowed(*w.last().unwrap(), t)).collect();
        w.push(next[rng.random_range(0..next.len())]);
    }
    w
}

fn property_cocycles(rng: &mut ChaCha8Rng) -> Vec<MatrixCocycle> {
    let mut out = vec![
        MatrixCocycle::new(Orientation::Unstable, vec![rot_diag(), rot_diag()]).expect("valid"),
        diag34(),
    ];
    while out.len() < 4 {
        let gens: Vec<DMatrix<f64>> = (0..2)
            .map(|_| {
                let m: DMatrix<f64> = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-2.0f64..2.0));
                let smin = m.clone().singular_values().min().max(1e-3);
                m * (1.5 / smin)
            })
            .collect();
        if let Ok(c) = MatrixCocycle::new(Orientation::Unstable, gens) {
            out.push(c);
        }
    }
    out
}

pub fn criterion_9(seed: u64) -> CriterionOutcome {
    let start = Instant::now();
    let mut rec = Recorder::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = Budget::default();
    let cocycles = property_cocycles(&mut rng);
    let specs = [SubshiftSpec::full_shift(2), SubshiftSpec::golden_mean()];

    let (mut sub_bad, mut super_bad, mut sandwich_bad, mut computed) = (0, 0, 0, 0);
    for i in 0..C9_PAIRS {
        let c = &cocycles[i % cocycles.len()];
        let spec = &specs[i % 2];
        let (a, b) = (rng.random_range(1..=20), rng.random_range(1..=20));
        let w = random_word(spec, a + b, &mut rng);
        let stats = [&w[..a], &w[a..], &w[..]].map(|s| product_stats_raw(c, s));
        let [Ok(u), Ok(v), Ok(uv)] = stats else {
            rec.check(false, "product statistics failed");
            break;
        };
        computed += 3;
        sub_bad += usize::from(uv.log_norm > u.log_norm + v.log_norm + C9_SLACK);
        super_bad += usize::from(uv.log_conorm < u.log_conorm + v.log_conorm - C9_SLACK);
        sandwich_bad += [u, v, uv].iter().filter(|s| !s.sandwich_holds(C9_SLACK)).count();
    }
    rec.check(sub_bad == 0, format!("log-norm sub-additivity violated on {sub_bad} of {C9_PAIRS} pairs"));
    rec.check(super_bad == 0, format!("log-conorm super-additivity violated on {super_bad} of {C9_PAIRS} pairs"));
    rec.check(sandwich_bad == 0, format!("sandwich violated on {sandwich_bad} of {computed} products"));

    let (mut monotone_bad, mut order_bad, mut evaluated) = (0, 0, 0);
    for c in &cocycles {
        for spec in &specs {
            for k in 0..=3 {
                let mut prev = [f64::INFINITY; 2];
                for g in 0..C9_GRID {
                    let t = 4.0 * g as f64 / (C9_GRID - 1) as f64;
                    let n = block_pressure(spec, c, t, k, SingularKind::Norm, &budget);
                    let m = block_pressure(spec, c, t, k, SingularKind::Conorm, &budget);
                    let (Some(n), Some(m)) = (rec.ok("block pressure", n), rec.ok("block pressure", m)) else {
                        continue;
                    };
                    evaluated += 1;
                    monotone_bad += usize::from(!(n.value < prev[0]) || !(m.value < prev[1]));
                    order_bad += usize::from(n.value > m.value + C9_SLACK);
                    prev = [n.value, m.value];
                }
            }
        }
    }
    rec.check(monotone_bad == 0, format!("pressure not strictly decreasing at {monotone_bad} of {evaluated} grid steps"));
    rec.check(order_bad == 0, format!("norm pressure above conorm pressure at {order_bad} of {evaluated} points"));
    finish(9, "property suites", rec, start, C9_RUNTIME)
}

/// Runs every criterion in order.
pub fn run_all(seed: u64) -> Vec<CriterionOutcome> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(seed),
        criterion_6(seed),
        criterion_7(),
        criterion_8(seed),
        criterion_9(seed),
    ]
}
