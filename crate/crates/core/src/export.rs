//! Plot-ready CSV tables. Floats are written with 12 significant digits.

use std::path::Path;

use crate::dimension::{BracketRow, SweepResult};
use crate::error::Result;
use crate::geometry::{BoxCountResult, PointCloud};

/// `x` rounded to 12 significant digits, printed in shortest form.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    rounded.to_string()
}

fn write_rows<P: AsRef<Path>>(path: P, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// One coordinate row per point.
pub fn write_points<P: AsRef<Path>>(path: P, cloud: &PointCloud) -> Result<()> {
    let header: Vec<String> = (0..cloud.dim).map(|k| format!("x{k}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(path, &header, cloud.points().map(|p| p.iter().map(|&v| fmt_sig(v)).collect()))
}

/// `(delta, N)` per scale.
pub fn write_box_counts<P: AsRef<Path>>(path: P, result: &BoxCountResult) -> Result<()> {
    write_rows(
        path,
        &["delta", "count"],
        result
            .scales
            .iter()
            .zip(&result.counts)
            .map(|(d, n)| vec![fmt_sig(*d), n.to_string()]),
    )
}

/// Bracket tables of one or more bundles.
pub fn write_brackets<P: AsRef<Path>>(path: P, tables: &[(&str, &[BracketRow])]) -> Result<()> {
    let rows = tables.iter().flat_map(|(bundle, rows)| {
        rows.iter().map(move |r| {
            vec![
                bundle.to_string(),
                r.k.to_string(),
                r.block_len.to_string(),
                fmt_sig(r.lower.t),
                fmt_sig(r.upper.t),
                fmt_sig(r.gap()),
                fmt_sig(r.defect),
            ]
        })
    });
    write_rows(path, &["bundle", "k", "block_len", "lower", "upper", "gap", "defect"], rows)
}

/// One row per grid point; failed points have an empty `dim` and a message.
pub fn write_sweep<P: AsRef<Path>>(path: P, parameter: &str, sweep: &SweepResult) -> Result<()> {
    write_rows(
        path,
        &[parameter, "dim", "certified", "error"],
        sweep.points.iter().map(|p| {
            vec![
                fmt_sig(p.parameter),
                p.dim_total.map(fmt_sig).unwrap_or_default(),
                p.certified.to_string(),
                p.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

/// A labelled pressure value `P_k(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub bundle: String,
    pub potential: String,
    pub k: u32,
    pub t: f64,
    pub value: f64,
}

pub fn write_pressure_curve<P: AsRef<Path>>(path: P, points: &[CurvePoint]) -> Result<()> {
    write_rows(
        path,
        &["bundle", "potential", "k", "t", "pressure"],
        points.iter().map(|c| {
            vec![c.bundle.clone(), c.potential.clone(), c.k.to_string(), fmt_sig(c.t), fmt_sig(c.value)]
        }),
    )
}

/// `(n, (1/n) log #words of length n)`.
pub fn write_entropy_levels<P: AsRef<Path>>(path: P, levels: &[(usize, f64)]) -> Result<()> {
    write_rows(path, &["n", "growth_rate"], levels.iter().map(|(n, v)| vec![n.to_string(), fmt_sig(*v)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(0.630929753571457), "0.630929753571");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-2.5e-13), "-0.00000000000025");
        assert_eq!(fmt_sig(f64::NAN), "NaN");
    }

    #[test]
    fn box_count_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bc.csv");
        let r = BoxCountResult {
            scales: vec![0.5, 0.25],
            counts: vec![2, 4],
            slope: 1.0,
            intercept: 0.0,
            r_squared: 1.0,
            standard_error: 0.0,
            points: 4,
            warnings: vec![],
        };
        write_box_counts(&path, &r).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "delta,count\n0.5,2\n0.25,4\n");
    }
}
