use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boxcount::least_squares;
use super::model::HorseshoeModel;
use super::MODULE;
use crate::error::{Error, Result};
use crate::symbolic::SubshiftSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    /// `min(s, 1/s)`: the exponent valid for the conjugacy and its inverse.
    pub r_lower: f64,
    /// Least-squares slope of `log d_b` against `log d_a`.
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination.
    pub fit_quality: f64,
    pub pairs: usize,
    pub depth: usize,
    pub seed: u64,
}

fn random_word<R: Rng>(spec: &SubshiftSpec, prefix: &[usize], len: usize, rng: &mut R) -> Vec<usize> {
    let q = spec.alphabet_size();
    let mut w = prefix.to_vec();
    while w.len() < len {
        let next: Vec<usize> = match w.last() {
            None => (0..q).collect(),
            Some(&s) => (0..q).filter(|&t| spec.allowed(s, t)).collect(),
        };
        w.push(next[rng.random_range(0..next.len())]);
    }
    w
}

/// A pair of admissible words of length `n` sharing exactly a prefix of length `k`.
fn random_pair<R: Rng>(spec: &SubshiftSpec, n: usize, rng: &mut R) -> Option<(Vec<usize>, Vec<usize>, usize)> {
    let q = spec.alphabet_size();
    for _ in 0..1000 {
        let w = random_word(spec, &[], n, rng);
        let k = rng.random_range(0..n);
        let alts: Vec<usize> = (0..q)
            .filter(|&s| s != w[k] && (k == 0 || spec.allowed(w[k - 1], s)))
            .collect();
        if alts.is_empty() {
            continue;
        }
        let mut prefix = w[..k].to_vec();
        prefix.push(alts[rng.random_range(0..alts.len())]);
        let v = random_word(spec, &prefix, n, rng);
        return Some((w, v, k));
    }
    None
}

/// `log |x(w) - x(v)|` on the unstable factor, where `w` and `v` agree on
/// the first `k` symbols. The shared prefix acts linearly on the difference
/// of the tails, applied one factor at a time with renormalisation so long
/// prefixes never underflow.
fn log_distance(model: &HorseshoeModel, w: &[usize], v: &[usize], k: usize) -> f64 {
    let center = DVector::from_element(model.unstable_dim(), 0.5);
    let a = model.unstable_cylinder_map(&w[k..]).apply(&center);
    let b = model.unstable_cylinder_map(&v[k..]).apply(&center);
    let mut diff = a - b;
    let mut log_scale = 0.0;
    for &s in w[..k].iter().rev() {
        diff = &model.inverse_unstable(s).a * diff;
        let n = diff.norm();
        log_scale += n.ln();
        diff /= n;
    }
    log_scale + diff.norm().ln()
}

/// Fits the Hölder exponent of the conjugacy between two models on unstable
/// slices: points with identical itineraries are matched, and `log d_b` is
/// regressed on `log d_a` over random pairs at depth `depth`.
pub fn holder_exponent_fit(
    model_a: &HorseshoeModel,
    model_b: &HorseshoeModel,
    depth: usize,
    sample_size: usize,
    seed: u64,
) -> Result<HolderFit> {
    if model_a.coding() != model_b.coding() {
        return Err(Error::domain(MODULE, "models have different codings; no conjugacy to fit"));
    }
    if !(2..=64).contains(&depth) {
        return Err(Error::domain(MODULE, format!("depth must be in 2..=64, got {depth}")));
    }
    if sample_size < 3 {
        return Err(Error::domain(MODULE, "need at least 3 sample pairs"));
    }
    let spec = model_a.coding();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..sample_size)
        .map(|_| {
            random_pair(spec, depth, &mut rng)
                .ok_or_else(|| Error::domain(MODULE, "coding has no branching; distances are undefined"))
        })
        .collect::<Result<Vec<_>>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs
        .par_iter()
        .map(|(w, v, k)| (log_distance(model_a, w, v, *k), log_distance(model_b, w, v, *k)))
        .unzip();
    let (slope, intercept, fit_quality, _) = least_squares(&xs, &ys);
    Ok(HolderFit {
        r_lower: slope.min(1.0 / slope),
        slope,
        intercept,
        fit_quality,
        pairs: sample_size,
        depth,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_distance_matches_direct_evaluation() {
        let m = HorseshoeModel::linear(2, 3.0, 0.2).unwrap();
        let w = [0, 1, 1, 0, 1, 0];
        let v = [0, 1, 0, 0, 0, 1];
        let c = DVector::from_element(1, 0.5);
        let direct = (m.unstable_cylinder_map(&w).apply(&c) - m.unstable_cylinder_map(&v).apply(&c)).norm();
        assert!((log_distance(&m, &w, &v, 2) - direct.ln()).abs() < 1e-12);
    }

    #[test]
    fn examples() {
        let a = HorseshoeModel::linear(2, 3.0, 0.2).unwrap();
        let same = holder_exponent_fit(&a, &a, 20, 500, 1).unwrap();
        assert!((same.r_lower - 1.0).abs() < 1e-12);
        let b = HorseshoeModel::linear(2, 3.3, 0.2).unwrap();
        let r = holder_exponent_fit(&a, &b, 20, 2000, 7).unwrap();
        assert!((r.r_lower - 3f64.ln() / 3.3f64.ln()).abs() < 0.03, "{}", r.r_lower);
        let c = HorseshoeModel::linear(2, 9.0, 0.2).unwrap();
        let r = holder_exponent_fit(&a, &c, 20, 2000, 7).unwrap();
        assert!((r.r_lower - 0.5).abs() < 0.03, "{}", r.r_lower);
    }

    #[test]
    fn different_codings_rejected() {
        let a = HorseshoeModel::linear(2, 3.0, 0.2).unwrap();
        let b = HorseshoeModel::linear(3, 4.0, 0.2).unwrap();
        assert!(holder_exponent_fit(&a, &b, 10, 100, 0).is_err());
    }
}
