use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{Affine, HorseshoeModel};
use super::MODULE;
use crate::error::{Error, Result};
use crate::symbolic::{Budget, Word};

/// Points in the ambient cube, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub forward_depth: usize,
    pub backward_depth: usize,
    pub seed: Option<u64>,
    /// Upper bound on the distance from each point to the set it samples.
    pub resolution: f64,
    pub kind: String,
}

impl PointCloud {
    /// A cloud from raw coordinates (row-major, `dim` per point).
    pub fn from_coords(dim: usize, coords: Vec<f64>, resolution: f64) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::domain(MODULE, "coordinate count is not a multiple of the dimension"));
        }
        Ok(Self {
            dim,
            coords,
            forward_depth: 0,
            backward_depth: 0,
            seed: None,
            resolution,
            kind: "raw".into(),
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Diagonal of the bounding box.
    pub fn diameter(&self) -> f64 {
        (0..self.dim)
            .map(|k| {
                let (lo, hi) = self
                    .points()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])));
                if self.is_empty() { 0.0 } else { hi - lo }
            })
            .map(|e| e * e)
            .sum::<f64>()
            .sqrt()
    }

    /// Points within Euclidean distance `radius` of `center`.
    pub fn restrict_to_ball(&self, center: &[f64], radius: f64) -> PointCloud {
        let coords = self
            .points()
            .filter(|p| p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= radius * radius)
            .flatten()
            .copied()
            .collect();
        PointCloud {
            coords,
            kind: format!("{} (radius {radius})", self.kind),
            ..self.clone()
        }
    }
}

struct Cylinder {
    first: usize,
    last: usize,
    map: Affine,
}

fn identity(d: usize) -> Affine {
    Affine {
        a: DMatrix::identity(d, d),
        b: DVector::zeros(d),
    }
}

/// Unstable cylinder maps of all admissible forward words of length `n`,
/// in lexicographic order.
fn forward_cylinders(model: &HorseshoeModel, n: usize) -> Vec<Cylinder> {
    let spec = model.coding();
    let q = spec.alphabet_size();
    let mut level: Vec<Cylinder> = (0..q)
        .map(|i| Cylinder {
            first: i,
            last: i,
            map: model.inverse_unstable(i).compose(&identity(model.unstable_dim())),
        })
        .collect();
    for _ in 1..n {
        let mut next = Vec::new();
        for i in 0..q {
            for c in level.iter().filter(|c| spec.allowed(i, c.first)) {
                next.push(Cylinder {
                    first: i,
                    last: c.last,
                    map: model.inverse_unstable(i).compose(&c.map),
                });
            }
        }
        level = next;
    }
    level
}

/// Stable cylinder maps of all admissible pasts `(w_{-n}, ..., w_{-1})`.
fn backward_cylinders(model: &HorseshoeModel, n: usize) -> Vec<Cylinder> {
    let spec = model.coding();
    let q = spec.alphabet_size();
    let mut level: Vec<Cylinder> = (0..q)
        .map(|i| Cylinder {
            first: i,
            last: i,
            map: model.stable_map(i).compose(&identity(model.stable_dim())),
        })
        .collect();
    for _ in 1..n {
        let mut next = Vec::new();
        for c in &level {
            for i in (0..q).filter(|&i| spec.allowed(c.last, i)) {
                next.push(Cylinder {
                    first: c.first,
                    last: i,
                    map: model.stable_map(i).compose(&c.map),
                });
            }
        }
        level = next;
    }
    level
}

fn max_diameter(cyls: &[Cylinder], d: usize) -> f64 {
    let side = (d as f64).sqrt();
    cyls.iter()
        .map(|c| c.map.a.clone().singular_values().max() * side)
        .fold(0.0, f64::max)
}

/// Representative of the cube: its center, or a seeded random interior point.
fn representative(d: usize, rng: Option<&mut ChaCha8Rng>) -> DVector<f64> {
    match rng {
        None => DVector::from_element(d, 0.5),
        Some(r) => DVector::from_fn(d, |_, _| r.random::<f64>()),
    }
}

fn rng_for(seed: Option<u64>, stream: u64) -> Option<ChaCha8Rng> {
    seed.map(|s| {
        let mut r = ChaCha8Rng::seed_from_u64(s);
        r.set_stream(stream);
        r
    })
}

fn check_depth(n: usize, what: &str) -> Result<()> {
    if n == 0 || n > 64 {
        return Err(Error::domain(MODULE, format!("{what} depth must be in 1..=64, got {n}")));
    }
    Ok(())
}

/// One point per pair (past of length `backward_depth`, future of length
/// `forward_depth`) with an admissible junction.
///
/// Without a seed the representative of each product rectangle is the image
/// of the cube center; with a seed it is the image of a random point, drawn
/// from a stream keyed by the forward word so the output does not depend on
/// the thread count.
pub fn sample_product(
    model: &HorseshoeModel,
    forward_depth: usize,
    backward_depth: usize,
    seed: Option<u64>,
    budget: &Budget,
) -> Result<PointCloud> {
    check_depth(forward_depth, "forward")?;
    check_depth(backward_depth, "backward")?;
    let spec = model.coding();
    let count = spec.word_count(forward_depth).saturating_mul(spec.word_count(backward_depth));
    budget.check(MODULE, "sampled points", count)?;
    let fwd = forward_cylinders(model, forward_depth);
    let bwd = backward_cylinders(model, backward_depth);
    let (du, ds) = (model.unstable_dim(), model.stable_dim());
    let resolution = max_diameter(&fwd, du).hypot(max_diameter(&bwd, ds));
    let bwd_centers: Vec<DVector<f64>> = bwd.iter().map(|b| b.map.apply(&representative(ds, None))).collect();
    let chunks: Vec<Vec<f64>> = fwd
        .par_iter()
        .enumerate()
        .map(|(fi, f)| {
            let mut rng = rng_for(seed, fi as u64);
            let mut out = Vec::new();
            let center_x = f.map.apply(&representative(du, None));
            for (b, yc) in bwd.iter().zip(&bwd_centers).filter(|(b, _)| spec.allowed(b.last, f.first)) {
                match rng.as_mut() {
                    None => out.extend(center_x.iter().chain(yc.iter())),
                    Some(r) => {
                        let ux = representative(du, Some(r));
                        let uy = representative(ds, Some(r));
                        out.extend(f.map.apply(&ux).iter().chain(b.map.apply(&uy).iter()));
                    }
                }
            }
            out
        })
        .collect();
    Ok(PointCloud {
        dim: du + ds,
        coords: chunks.concat(),
        forward_depth,
        backward_depth,
        seed,
        resolution,
        kind: "invariant-set".into(),
    })
}

/// `q^{2n}` points (full shift) sampling the invariant set at depth `n` in both time directions.
pub fn sample_invariant_set(model: &HorseshoeModel, depth: usize, seed: Option<u64>, budget: &Budget) -> Result<PointCloud> {
    sample_product(model, depth, depth, seed, budget)
}

/// Forward and backward depths with comparable rectangle sides that fit in
/// the point budget: minimizes the larger of the two side bounds.
pub fn balanced_depths(model: &HorseshoeModel, budget: &Budget) -> Result<(usize, usize)> {
    let (ru, rs) = (model.unstable_rate().ln(), model.stable_rate().ln());
    let spec = model.coding();
    let mut best: Option<(f64, u128, usize, usize)> = None;
    for nf in 1..=64 {
        if spec.word_count(nf) > budget.max_words {
            break;
        }
        for nb in 1..=64 {
            let count = spec.word_count(nf).saturating_mul(spec.word_count(nb));
            if count > budget.max_words {
                break;
            }
            let side = (nf as f64 * ru).max(nb as f64 * rs);
            let better = match best {
                None => true,
                Some((s, c, _, _)) => side < s - 1e-12 || (side <= s + 1e-12 && count > c),
            };
            if better {
                best = Some((side, count, nf, nb));
            }
        }
    }
    best.map(|(_, _, nf, nb)| (nf, nb))
        .ok_or_else(|| Error::resource(MODULE, "point budget too small for depth 1", budget.max_words))
}

fn slice_past_check(model: &HorseshoeModel, w: &Word, what: &str) -> Result<()> {
    if w.is_empty() || !model.coding().is_admissible(w.symbols()) {
        return Err(Error::domain(MODULE, format!("inadmissible {what} itinerary {w}")));
    }
    Ok(())
}

/// Restricts a slice to the local manifold of size `beta` around its first point.
fn restrict_slice(cloud: PointCloud, beta: f64) -> PointCloud {
    if cloud.is_empty() || beta >= cloud.diameter() {
        return cloud;
    }
    let center = cloud.point(0).to_vec();
    cloud.restrict_to_ball(&center, beta)
}

/// Points of the invariant set on the local unstable manifold selected by a
/// fixed past `(w_{-m}, ..., w_{-1})`: the stable coordinate is the past's
/// representative and the forward words of length `depth` vary.
pub fn sample_unstable_slice(
    model: &HorseshoeModel,
    past: &Word,
    depth: usize,
    seed: Option<u64>,
    budget: &Budget,
) -> Result<PointCloud> {
    slice_past_check(model, past, "past")?;
    check_depth(depth, "slice")?;
    let spec = model.coding();
    budget.check(MODULE, "sampled points", spec.word_count(depth))?;
    let (du, ds) = (model.unstable_dim(), model.stable_dim());
    let mut rng = rng_for(seed, u64::MAX);
    let y = model.stable_cylinder_map(past.symbols()).apply(&representative(ds, rng.as_mut()));
    let last = past.last().unwrap();
    let fwd: Vec<Cylinder> = forward_cylinders(model, depth)
        .into_iter()
        .filter(|c| spec.allowed(last, c.first))
        .collect();
    let chunks: Vec<Vec<f64>> = fwd
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let mut r = rng_for(seed, i as u64);
            let x = f.map.apply(&representative(du, r.as_mut()));
            x.iter().chain(y.iter()).copied().collect()
        })
        .collect();
    let cloud = PointCloud {
        dim: du + ds,
        coords: chunks.concat(),
        forward_depth: depth,
        backward_depth: past.len(),
        seed,
        resolution: max_diameter(&fwd, du),
        kind: format!("unstable-slice past={past}"),
    };
    Ok(restrict_slice(cloud, model.beta()))
}

/// Points of the invariant set on the local stable manifold selected by a
/// fixed future `(w_0, ..., w_{m-1})`; pasts of length `depth` vary.
pub fn sample_stable_slice(
    model: &HorseshoeModel,
    future: &Word,
    depth: usize,
    seed: Option<u64>,
    budget: &Budget,
) -> Result<PointCloud> {
    slice_past_check(model, future, "future")?;
    check_depth(depth, "slice")?;
    let spec = model.coding();
    budget.check(MODULE, "sampled points", spec.word_count(depth))?;
    let (du, ds) = (model.unstable_dim(), model.stable_dim());
    let mut rng = rng_for(seed, u64::MAX);
    let x = model.unstable_cylinder_map(future.symbols()).apply(&representative(du, rng.as_mut()));
    let first = future.first().unwrap();
    let bwd: Vec<Cylinder> = backward_cylinders(model, depth)
        .into_iter()
        .filter(|c| spec.allowed(c.last, first))
        .collect();
    let chunks: Vec<Vec<f64>> = bwd
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            let mut r = rng_for(seed, i as u64);
            let y = b.map.apply(&representative(ds, r.as_mut()));
            x.iter().chain(y.iter()).copied().collect()
        })
        .collect();
    let cloud = PointCloud {
        dim: du + ds,
        coords: chunks.concat(),
        forward_depth: future.len(),
        backward_depth: depth,
        seed,
        resolution: max_diameter(&bwd, ds),
        kind: format!("stable-slice future={future}"),
    };
    Ok(restrict_slice(cloud, model.beta()))
}
