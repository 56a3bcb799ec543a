use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::PointCloud;
use super::MODULE;
use crate::error::{Error, Result};

/// Smallest usable scale as a multiple of the sampling resolution.
pub const RESOLUTION_MARGIN: f64 = 8.0;
/// Largest usable scale as a fraction of the cloud diameter.
pub const DIAMETER_FRACTION: f64 = 0.25;
/// Number of dyadic scales kept by [`auto_dyadic_scales`] (the finest ones).
pub const AUTO_SCALE_COUNT: usize = 12;
pub const MIN_SCALES: usize = 4;

/// Grid-box counts and the least-squares fit of `log N` against `-log delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCountResult {
    /// Decreasing.
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination of the fit.
    pub r_squared: f64,
    pub standard_error: f64,
    pub points: usize,
    pub warnings: Vec<String>,
}

/// Ordinary least squares `y = a + b x`: `(b, a, r^2, standard error of b)`.
pub(crate) fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ssr / syy };
    let se = if x.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, intercept, r2, se)
}

/// Number of grid cells `[k delta, (k+1) delta)^d` hit by the cloud.
fn occupied_cells(cloud: &PointCloud, delta: f64) -> Result<u64> {
    let d = cloud.dim;
    let bits = (128 / d).min(63) as u32;
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for p in cloud.points() {
        for k in 0..d {
            let c = (p[k] / delta).floor() as i64;
            lo[k] = lo[k].min(c);
            hi[k] = hi[k].max(c);
        }
    }
    if (0..d).any(|k| (hi[k] - lo[k]) as u128 >= 1u128 << bits) {
        return Err(Error::domain(MODULE, format!("scale {delta} is too fine for the cloud extent")));
    }
    let mut keys: Vec<u128> = cloud
        .points()
        .map(|p| {
            (0..d).fold(0u128, |acc, k| (acc << bits) | ((p[k] / delta).floor() as i64 - lo[k]) as u128)
        })
        .collect();
    keys.sort_unstable();
    keys.dedup();
    Ok(keys.len() as u64)
}

/// Counts occupied grid boxes at each scale and fits the slope.
///
/// Grid boxes replace balls of radius `delta`; each ball meets at most `3^d`
/// boxes and each box lies in one ball of radius `sqrt(d) delta`, so the fitted
/// slope is the same. Scales are sorted decreasing; scales outside
/// `(resolution, diameter)` are kept but reported in `warnings`.
pub fn box_count(cloud: &PointCloud, scales: &[f64]) -> Result<BoxCountResult> {
    if cloud.is_empty() {
        return Err(Error::domain(MODULE, "cannot box-count an empty cloud"));
    }
    if scales.len() < MIN_SCALES {
        return Err(Error::domain(MODULE, format!("need at least {MIN_SCALES} scales, got {}", scales.len())));
    }
    if scales.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::domain(MODULE, "scales must be finite and positive"));
    }
    let mut scales = scales.to_vec();
    scales.sort_by(|a, b| b.partial_cmp(a).unwrap());
    scales.dedup();
    if scales.len() < MIN_SCALES {
        return Err(Error::domain(MODULE, format!("need at least {MIN_SCALES} distinct scales")));
    }
    let counts = scales
        .par_iter()
        .map(|&s| occupied_cells(cloud, s))
        .collect::<Result<Vec<u64>>>()?;
    let mut warnings = Vec::new();
    let diameter = cloud.diameter();
    if diameter == 0.0 {
        warnings.push("degenerate cloud: all points coincide, slope set to 0".to_string());
        return Ok(BoxCountResult {
            scales,
            counts,
            slope: 0.0,
            intercept: 0.0,
            r_squared: 1.0,
            standard_error: 0.0,
            points: cloud.len(),
            warnings,
        });
    }
    for &s in &scales {
        if s <= cloud.resolution || s >= diameter {
            warnings.push(format!("scale {s} outside (resolution {}, diameter {diameter})", cloud.resolution));
        }
    }
    if counts.windows(2).any(|w| w[1] < w[0]) {
        warnings.push("counts are not monotone in the scale".to_string());
    }
    let x: Vec<f64> = scales.iter().map(|s| -s.ln()).collect();
    let y: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, intercept, r_squared, standard_error) = least_squares(&x, &y);
    if !(0.0..=cloud.dim as f64).contains(&slope) {
        warnings.push(format!("slope {slope} outside [0, {}]", cloud.dim));
    }
    Ok(BoxCountResult {
        scales,
        counts,
        slope,
        intercept,
        r_squared,
        standard_error,
        points: cloud.len(),
        warnings,
    })
}

/// Dyadic scales `2^-j` between `RESOLUTION_MARGIN * resolution` and
/// `DIAMETER_FRACTION * diameter`, keeping the finest `AUTO_SCALE_COUNT`.
/// Coarser scales are dominated by the finitely many top-level pieces and
/// finer ones saturate at the point count.
pub fn auto_dyadic_scales(cloud: &PointCloud) -> Result<Vec<f64>> {
    let diameter = cloud.diameter();
    if diameter == 0.0 {
        return Ok((2..2 + MIN_SCALES as i32).map(|j| 2f64.powi(-j)).collect());
    }
    let j_min = (1.0 / (DIAMETER_FRACTION * diameter)).log2().ceil().max(2.0) as i32;
    let j_max = if cloud.resolution > 0.0 {
        (1.0 / (RESOLUTION_MARGIN * cloud.resolution)).log2().floor() as i32
    } else {
        j_min + AUTO_SCALE_COUNT as i32 - 1
    };
    let j_lo = j_min.max(j_max - AUTO_SCALE_COUNT as i32 + 1);
    if j_max - j_lo + 1 < MIN_SCALES as i32 {
        return Err(Error::domain(
            MODULE,
            format!(
                "only {} dyadic scales between resolution {} and diameter {diameter}; sample deeper",
                (j_max - j_lo + 1).max(0),
                cloud.resolution
            ),
        ));
    }
    Ok((j_lo..=j_max).map(|j| 2f64.powi(-j)).collect())
}

pub fn box_count_auto(cloud: &PointCloud) -> Result<BoxCountResult> {
    box_count(cloud, &auto_dyadic_scales(cloud)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::model::HorseshoeModel;
    use crate::geometry::sampling::{sample_invariant_set, sample_unstable_slice};
    use crate::symbolic::{Budget, Word};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn least_squares_exact_line() {
        let (b, a, r2, se) = least_squares(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]);
        assert!((b - 2.0).abs() < 1e-14 && (a - 1.0).abs() < 1e-14);
        assert!((r2 - 1.0).abs() < 1e-14 && se.abs() < 1e-7);
    }

    #[test]
    fn uniform_segment_has_slope_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let coords: Vec<f64> = (0..10_000)
            .flat_map(|_| {
                let s: f64 = rng.random();
                [0.1 + 0.6 * s, 0.2 + 0.3 * s]
            })
            .collect();
        let cloud = PointCloud::from_coords(2, coords, 0.0).unwrap();
        let scales: Vec<f64> = (2..8).map(|j| 2f64.powi(-j)).collect();
        let r = box_count(&cloud, &scales).unwrap();
        assert!((r.slope - 1.0).abs() < 0.05, "{}", r.slope);
        assert!(r.counts.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn degenerate_cloud() {
        let cloud = PointCloud::from_coords(2, vec![0.3, 0.3, 0.3, 0.3], 0.0).unwrap();
        let r = box_count_auto(&cloud).unwrap();
        assert_eq!(r.slope, 0.0);
        assert!(!r.warnings.is_empty());
        assert!(box_count(&cloud, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn middle_thirds_slice_with_triadic_scales() {
        let m = HorseshoeModel::linear(2, 3.0, 0.2).unwrap();
        let past = Word::new(m.coding(), vec![0]).unwrap();
        let cloud = sample_unstable_slice(&m, &past, 12, None, &Budget::default()).unwrap();
        let scales: Vec<f64> = (2..=8).map(|j| 3f64.powi(-j)).collect();
        let r = box_count(&cloud, &scales).unwrap();
        assert!((r.slope - 2f64.ln() / 3f64.ln()).abs() < 0.03, "{}", r.slope);
    }

    #[test]
    fn quarter_horseshoe_has_dimension_one() {
        let m = HorseshoeModel::linear(2, 4.0, 0.25).unwrap();
        let cloud = sample_invariant_set(&m, 10, None, &Budget::default()).unwrap();
        let r = box_count_auto(&cloud).unwrap();
        assert!((r.slope - 1.0).abs() < 0.05, "{} over {:?}", r.slope, r.scales);
    }

    #[test]
    fn auto_scales_respect_resolution() {
        let m = HorseshoeModel::linear(2, 3.0, 0.2).unwrap();
        let past = Word::new(m.coding(), vec![0]).unwrap();
        let cloud = sample_unstable_slice(&m, &past, 16, None, &Budget::default()).unwrap();
        let s = auto_dyadic_scales(&cloud).unwrap();
        assert_eq!(s.len(), AUTO_SCALE_COUNT);
        assert!(s.iter().all(|&d| d >= RESOLUTION_MARGIN * cloud.resolution));
        let r = box_count(&cloud, &s).unwrap();
        assert!((r.slope - 2f64.ln() / 3f64.ln()).abs() < 0.03, "{}", r.slope);
        let shallow = sample_unstable_slice(&m, &past, 3, None, &Budget::default()).unwrap();
        assert!(auto_dyadic_scales(&shallow).is_err());
    }
}
