use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::config::{Model, Numerics, RunConfig, Task};
use crate::acceptance::{self, CriterionOutcome};
use crate::dimension::{
    continuity_sweep, dimension_report, parameter_grid, BoxCountReference, DimensionOptions, ModelData,
};
use crate::error::{Error, Result};
use crate::export::{self, CurvePoint};
use crate::geometry::{
    auto_dyadic_scales, balanced_depths, box_count, holder_exponent_fit, sample_product, sample_stable_slice,
    sample_unstable_slice, BoxCountResult, PointCloud,
};
use crate::pressure::block::{max_feasible_k, BlockTable};
use crate::pressure::SingularKind;
use crate::symbolic::{topological_entropy, Word};

const MODULE: &str = "cli";

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_RESOURCE: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Conformality and hyperbolicity status of a model at the deepest level.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub k_max: u32,
    pub block_len: usize,
    pub defect_unstable: f64,
    pub defect_stable: f64,
    pub defect_tolerance: f64,
    pub root_tolerance: f64,
    pub max_words: u64,
    pub hyperbolicity: Vec<String>,
    pub certified: bool,
}

fn k_max(model: &Model, numerics: &Numerics) -> Result<u32> {
    match numerics.k_max {
        Some(k) => Ok(k),
        None => max_feasible_k(&model.spec, &numerics.budget())
            .ok_or_else(|| Error::resource(MODULE, "budget too small for level 0", numerics.max_words as u128)),
    }
}

fn dimension_options(model: &Model, numerics: &Numerics) -> Result<DimensionOptions> {
    Ok(DimensionOptions {
        k_max: Some(k_max(model, numerics)?),
        tol: numerics.tol,
        defect_tolerance: numerics.defect_tolerance,
        budget: numerics.budget(),
    })
}

fn certificate(model: &Model, numerics: &Numerics) -> Result<Certificate> {
    let budget = numerics.budget();
    let k = k_max(model, numerics)?;
    let u = BlockTable::build(&model.spec, &model.unstable, k, &budget)?;
    let s = BlockTable::build(&model.spec.reversed(), &model.stable.inverse(), k, &budget)?;
    let mut hyperbolicity = Vec::new();
    for c in [&model.unstable, &model.stable] {
        match c.check_hyperbolicity(&model.spec, &budget) {
            Ok(()) => hyperbolicity.push(format!("{} bundle hyperbolic", c.orientation())),
            Err(e) => hyperbolicity.push(format!("uncertified: {e}")),
        }
    }
    let certified = u.defect() <= numerics.defect_tolerance
        && s.defect() <= numerics.defect_tolerance
        && hyperbolicity.iter().all(|h| !h.starts_with("uncertified"));
    Ok(Certificate {
        k_max: k,
        block_len: u.block_len(),
        defect_unstable: u.defect(),
        defect_stable: s.defect(),
        defect_tolerance: numerics.defect_tolerance,
        root_tolerance: numerics.tol,
        max_words: numerics.max_words,
        hyperbolicity,
        certified,
    })
}

struct Output<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Output<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }
}

fn box_count_with(cloud: &PointCloud, numerics: &Numerics) -> Result<BoxCountResult> {
    match &numerics.scales {
        Some(s) => box_count(cloud, s),
        None => box_count(cloud, &auto_dyadic_scales(cloud)?),
    }
}

fn task_entropy(model: &Model, numerics: &Numerics, out: &mut Output) -> Result<serde_json::Value> {
    let h = topological_entropy(&model.spec)?;
    let levels: Vec<(usize, f64)> = (1..=numerics.entropy_levels)
        .map(|n| (n, (model.spec.word_count(n) as f64).ln() / n as f64))
        .collect();
    export::write_entropy_levels(out.path("entropy.csv"), &levels)?;
    Ok(json!({ "entropy": h, "alphabet_size": model.spec.alphabet_size(), "coding": model.spec.to_string() }))
}

fn task_pressure(model: &Model, numerics: &Numerics, out: &mut Output) -> Result<serde_json::Value> {
    let budget = numerics.budget();
    let k = k_max(model, numerics)?;
    let ts: Vec<f64> = (0..numerics.t_points)
        .map(|i| numerics.t_max * i as f64 / (numerics.t_points - 1) as f64)
        .collect();
    let reversed = model.spec.reversed();
    let inverse = model.stable.inverse();
    let mut points = Vec::new();
    for (bundle, spec, cocycle) in [("unstable", &model.spec, &model.unstable), ("stable", &reversed, &inverse)] {
        for level in 0..=k {
            let table = BlockTable::build(spec, cocycle, level, &budget)?;
            for kind in [SingularKind::Norm, SingularKind::Conorm] {
                for &t in &ts {
                    points.push(CurvePoint {
                        bundle: bundle.to_string(),
                        potential: kind.name().to_string(),
                        k: level,
                        t,
                        value: table.pressure(t, kind)?.value,
                    });
                }
            }
        }
    }
    export::write_pressure_curve(out.path("pressure_curve.csv"), &points)?;
    Ok(json!({
        "k_max": k,
        "t_max": numerics.t_max,
        "t_points": numerics.t_points,
        "rows": points.len(),
        "stable_bundle": "inverse cocycle over the reversed coding; its potential -t log m equals +t log||Df^n|E^s||",
    }))
}

fn task_dim(model: &Model, numerics: &Numerics, out: &mut Output) -> Result<serde_json::Value> {
    let report = dimension_report(&model.spec, &model.unstable, &model.stable, &dimension_options(model, numerics)?)?;
    export::write_brackets(
        out.path("brackets.csv"),
        &[("unstable", &report.unstable_brackets), ("stable", &report.stable_brackets)],
    )?;
    Ok(serde_json::to_value(&report)?)
}

fn task_boxcount(model: &Model, numerics: &Numerics, seed: u64, out: &mut Output) -> Result<serde_json::Value> {
    let h = model.horseshoe(Task::Boxcount)?;
    let budget = numerics.budget();
    let (nf, nb) = match numerics.depth {
        Some(d) => (d, d),
        None => balanced_depths(h, &budget)?,
    };
    let cloud = sample_product(h, nf, nb, Some(seed), &budget)?;
    let full = box_count_with(&cloud, numerics)?;
    export::write_box_counts(out.path("boxcount.csv"), &full)?;
    if numerics.write_points {
        export::write_points(out.path("points.csv"), &cloud)?;
    }
    let first = Word::new(h.coding(), vec![0])?;
    let su = sample_unstable_slice(h, &first, numerics.slice_depth, Some(seed), &budget)?;
    let su_fit = box_count(&su, &auto_dyadic_scales(&su)?)?;
    export::write_box_counts(out.path("boxcount_unstable_slice.csv"), &su_fit)?;
    let ss = sample_stable_slice(h, &first, numerics.slice_depth, Some(seed), &budget)?;
    let ss_fit = box_count(&ss, &auto_dyadic_scales(&ss)?)?;
    export::write_box_counts(out.path("boxcount_stable_slice.csv"), &ss_fit)?;
    let mut report = dimension_report(&model.spec, &model.unstable, &model.stable, &dimension_options(model, numerics)?)?;
    report.box_count_ref = Some(BoxCountReference {
        slope: full.slope,
        standard_error: full.standard_error,
        r_squared: full.r_squared,
        points: full.points,
        scales: full.scales.len(),
    });
    Ok(json!({
        "sampling": {
            "forward_depth": nf,
            "backward_depth": nb,
            "points": cloud.len(),
            "resolution": cloud.resolution,
            "seed": seed,
        },
        "invariant_set": full,
        "unstable_slice": su_fit,
        "stable_slice": ss_fit,
        "slice_sum": su_fit.slope + ss_fit.slope,
        "dimension": report,
    }))
}

fn task_sweep(config: &RunConfig, model: &Model, out: &mut Output) -> Result<serde_json::Value> {
    let sweep = config.sweep.as_ref().expect("validated");
    let base = config.model.as_ref().expect("validated");
    let grid = parameter_grid(sweep.start, sweep.stop, sweep.step)?;
    let family = |p: f64| -> Result<ModelData> {
        let m = base.with_parameter(sweep.parameter, p)?.build()?;
        Ok(ModelData {
            spec: m.spec,
            unstable: m.unstable,
            stable: m.stable,
        })
    };
    // validate the family once so a non-linear model fails up front
    base.with_parameter(sweep.parameter, sweep.start)?;
    let result = continuity_sweep(family, &grid, &dimension_options(model, &config.numerics)?);
    export::write_sweep(out.path("sweep.csv"), sweep.parameter.name(), &result)?;
    Ok(serde_json::to_value(&result)?)
}

fn task_holder(config: &RunConfig, model: &Model, seed: u64) -> Result<serde_json::Value> {
    let hc = config.holder.as_ref().expect("validated");
    let a = model.horseshoe(Task::Holder)?;
    let other = hc.other.build()?;
    let b = other.horseshoe(Task::Holder)?;
    let fit = holder_exponent_fit(a, b, hc.depth, hc.pairs, seed)?;
    Ok(serde_json::to_value(&fit)?)
}

fn write_acceptance(path: PathBuf, outcomes: &[CriterionOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["criterion", "passed", "title"])?;
    for o in outcomes {
        w.write_record([o.id.to_string(), o.passed.to_string(), o.title.clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs one task, writing `report.json` and the task's CSV tables into `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut out = Output {
        dir: out_dir,
        files: Vec::new(),
    };
    let numerics = &config.numerics;
    let model = config.model.as_ref().map(|m| m.build()).transpose()?;
    let seed = config.seed.unwrap_or(0);
    let mut exit_code = EXIT_OK;
    let mut summary = Vec::new();

    let (certificate, result) = match (config.task, &model) {
        (Task::Verify, _) => {
            let outcomes = acceptance::run_all(seed);
            for o in &outcomes {
                summary.push(o.summary_line());
            }
            if outcomes.iter().any(|o| !o.passed) {
                exit_code = EXIT_VERIFICATION;
            }
            write_acceptance(out.path("acceptance.csv"), &outcomes)?;
            (None, serde_json::to_value(&outcomes)?)
        }
        (task, Some(m)) => {
            let cert = certificate(m, numerics)?;
            let result = match task {
                Task::Entropy => task_entropy(m, numerics, &mut out)?,
                Task::Pressure => task_pressure(m, numerics, &mut out)?,
                Task::Dim => task_dim(m, numerics, &mut out)?,
                Task::Boxcount => task_boxcount(m, numerics, seed, &mut out)?,
                Task::Sweep => task_sweep(config, m, &mut out)?,
                Task::Holder => task_holder(config, m, seed)?,
                Task::Verify => unreachable!(),
            };
            summary.push(format!(
                "{task}: certified = {}, defects {:.6} / {:.6} at k = {}",
                cert.certified, cert.defect_unstable, cert.defect_stable, cert.k_max
            ));
            if let Some(d) = result.get("dim_total") {
                summary.push(format!("dim_total = {d}"));
            }
            (Some(cert), result)
        }
        (_, None) => unreachable!("validated: model present"),
    };

    let report = json!({
        "task": config.task,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "certificate": certificate,
        "result": result,
    });
    let path = out.path("report.json");
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(RunOutcome {
        exit_code,
        files: out.files,
        summary,
    })
}
