use nalgebra::{DMatrix, DVector};

use super::MODULE;
use crate::cocycle::{MatrixCocycle, Orientation};
use crate::error::{Error, Result};
use crate::symbolic::SubshiftSpec;

/// One branch of an affine horseshoe on `[0,1]^du x [0,1]^ds`.
///
/// On its rectangle `R_i = g_i([0,1]^du) x [0,1]^ds` the map is
/// `f(x, y) = (U_i (x - c_i), S_i y + d_i)`, where `g_i(x) = U_i^{-1} x + c_i`
/// is the inverse unstable branch. Hence `Df = diag(U_i, S_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineBranch {
    pub expansion: DMatrix<f64>,
    pub unstable_offset: DVector<f64>,
    pub contraction: DMatrix<f64>,
    pub stable_offset: DVector<f64>,
}

/// An affine map `z -> a z + b`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Affine {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Affine {
    pub fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.a * z + &self.b
    }

    /// `self o inner`
    pub fn compose(&self, inner: &Affine) -> Affine {
        Affine {
            a: &self.a * &inner.a,
            b: &self.a * &inner.b + &self.b,
        }
    }
}

/// A horseshoe with affine branches and a subshift coding.
///
/// A point with itinerary `(..., w_{-2}, w_{-1}; w_0, w_1, ...)` has unstable
/// coordinate `lim g_{w_0} o ... o g_{w_{n-1}}` and stable coordinate
/// `lim h_{w_{-1}} o ... o h_{w_{-n}}` with `h_i(y) = S_i y + d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HorseshoeModel {
    spec: SubshiftSpec,
    branches: Vec<AffineBranch>,
    inverse_unstable: Vec<Affine>,
    stable_maps: Vec<Affine>,
    du: usize,
    ds: usize,
    min_gap: f64,
    beta: f64,
}

fn unit_cube_corners(d: usize) -> Vec<DVector<f64>> {
    (0..1usize << d)
        .map(|mask| DVector::from_fn(d, |i, _| ((mask >> i) & 1) as f64))
        .collect()
}

/// Axis-aligned bounding box of the image of the unit cube.
fn image_box(map: &Affine) -> (DVector<f64>, DVector<f64>) {
    let d = map.b.len();
    let mut lo = DVector::from_element(d, f64::INFINITY);
    let mut hi = DVector::from_element(d, f64::NEG_INFINITY);
    for c in unit_cube_corners(map.a.ncols()) {
        let p = map.apply(&c);
        for i in 0..d {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    (lo, hi)
}

/// Largest coordinate gap separating two boxes (negative when they overlap).
fn box_separation(a: &(DVector<f64>, DVector<f64>), b: &(DVector<f64>, DVector<f64>)) -> f64 {
    (0..a.0.len())
        .map(|i| (b.0[i] - a.1[i]).max(a.0[i] - b.1[i]))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn check_images(maps: &[Affine], min_gap: f64, which: &str) -> Result<()> {
    let boxes: Vec<_> = maps.iter().map(image_box).collect();
    for (i, (lo, hi)) in boxes.iter().enumerate() {
        if lo.iter().any(|&v| v < -1e-12) || hi.iter().any(|&v| v > 1.0 + 1e-12) {
            return Err(Error::domain(MODULE, format!("{which} image of branch {i} leaves the unit cube")));
        }
    }
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            let gap = box_separation(&boxes[i], &boxes[j]);
            if gap < min_gap {
                return Err(Error::domain(
                    MODULE,
                    format!("{which} images of branches {i} and {j} are separated by {gap}, below the declared gap {min_gap}"),
                ));
            }
        }
    }
    Ok(())
}

impl HorseshoeModel {
    /// Validates the Markov property (branch images inside the cube and
    /// pairwise separated by at least `min_gap`) and hyperbolicity of every branch.
    pub fn new(spec: SubshiftSpec, branches: Vec<AffineBranch>, min_gap: f64) -> Result<Self> {
        spec.require_irreducible(MODULE)?;
        if branches.len() != spec.alphabet_size() {
            return Err(Error::domain(
                MODULE,
                format!("{} branches for an alphabet of size {}", branches.len(), spec.alphabet_size()),
            ));
        }
        if !(min_gap >= 0.0) {
            return Err(Error::domain(MODULE, "declared minimum gap must be nonnegative"));
        }
        let du = branches[0].expansion.nrows();
        let ds = branches[0].contraction.nrows();
        if du == 0 || ds == 0 {
            return Err(Error::domain(MODULE, "both factors need positive dimension"));
        }
        let mut inverse_unstable = Vec::new();
        let mut stable_maps = Vec::new();
        for (i, b) in branches.iter().enumerate() {
            let shapes_ok = b.expansion.shape() == (du, du)
                && b.unstable_offset.len() == du
                && b.contraction.shape() == (ds, ds)
                && b.stable_offset.len() == ds;
            if !shapes_ok {
                return Err(Error::domain(MODULE, format!("branch {i} has inconsistent shapes")));
            }
            let su = b.expansion.clone().singular_values();
            if !(su.min() > 1.0) {
                return Err(Error::domain(MODULE, format!("branch {i} does not expand the unstable factor (min singular value {})", su.min())));
            }
            let ss = b.contraction.clone().singular_values();
            if !(ss.max() < 1.0) || ss.min() == 0.0 {
                return Err(Error::domain(MODULE, format!("branch {i} does not contract the stable factor invertibly (singular values {ss:?})")));
            }
            let inv = b
                .expansion
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::domain(MODULE, format!("branch {i} expansion is singular")))?;
            inverse_unstable.push(Affine {
                a: inv,
                b: b.unstable_offset.clone(),
            });
            stable_maps.push(Affine {
                a: b.contraction.clone(),
                b: b.stable_offset.clone(),
            });
        }
        check_images(&inverse_unstable, min_gap, "unstable")?;
        check_images(&stable_maps, min_gap, "stable")?;
        Ok(Self {
            spec,
            branches,
            inverse_unstable,
            stable_maps,
            du,
            ds,
            min_gap,
            beta: (du as f64).sqrt(),
        })
    }

    /// The full-shift horseshoe on the unit square with `q` equally spaced
    /// strips, expansion `mu` and contraction `lambda`. Needs `mu > q > 1/lambda`.
    pub fn linear(q: usize, mu: f64, lambda: f64) -> Result<Self> {
        if q < 2 {
            return Err(Error::domain(MODULE, "a horseshoe needs at least two branches"));
        }
        if !(mu > q as f64) || !(lambda > 0.0 && lambda < 1.0 / q as f64) {
            return Err(Error::domain(
                MODULE,
                format!("linear horseshoe needs mu > {q} and 0 < lambda < 1/{q}, got mu={mu}, lambda={lambda}"),
            ));
        }
        let step_u = (1.0 - 1.0 / mu) / (q - 1) as f64;
        let step_s = (1.0 - lambda) / (q - 1) as f64;
        let gap = (step_u - 1.0 / mu).min(step_s - lambda);
        let branches = (0..q)
            .map(|i| AffineBranch {
                expansion: DMatrix::from_element(1, 1, mu),
                unstable_offset: DVector::from_element(1, i as f64 * step_u),
                contraction: DMatrix::from_element(1, 1, lambda),
                stable_offset: DVector::from_element(1, i as f64 * step_s),
            })
            .collect();
        Self::new(SubshiftSpec::full_shift(q), branches, 0.5 * gap)
    }

    /// Sets the local-manifold size used by the slice samplers.
    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::domain(MODULE, "beta must be positive"));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn coding(&self) -> &SubshiftSpec {
        &self.spec
    }

    pub fn branches(&self) -> &[AffineBranch] {
        &self.branches
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn unstable_dim(&self) -> usize {
        self.du
    }

    pub fn stable_dim(&self) -> usize {
        self.ds
    }

    pub fn ambient_dim(&self) -> usize {
        self.du + self.ds
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub(crate) fn inverse_unstable(&self, i: usize) -> &Affine {
        &self.inverse_unstable[i]
    }

    pub(crate) fn stable_map(&self, i: usize) -> &Affine {
        &self.stable_maps[i]
    }

    /// Largest contraction rate of the inverse unstable branches.
    pub fn unstable_rate(&self) -> f64 {
        self.inverse_unstable
            .iter()
            .map(|m| m.a.clone().singular_values().max())
            .fold(0.0, f64::max)
    }

    /// Largest contraction rate of the stable branches.
    pub fn stable_rate(&self) -> f64 {
        self.stable_maps
            .iter()
            .map(|m| m.a.clone().singular_values().max())
            .fold(0.0, f64::max)
    }

    /// `Df|E^u` along orbits: the expansion matrices `U_i`.
    pub fn unstable_cocycle(&self) -> Result<MatrixCocycle> {
        MatrixCocycle::new(Orientation::Unstable, self.branches.iter().map(|b| b.expansion.clone()).collect())
    }

    /// `Df|E^s` along orbits: the contraction matrices `S_i`.
    pub fn stable_cocycle(&self) -> Result<MatrixCocycle> {
        MatrixCocycle::new(Orientation::Stable, self.branches.iter().map(|b| b.contraction.clone()).collect())
    }

    /// `g_{w_0} o ... o g_{w_{n-1}}`: maps the unit cube onto the unstable cylinder of `w`.
    pub(crate) fn unstable_cylinder_map(&self, w: &[usize]) -> Affine {
        let mut m = Affine {
            a: DMatrix::identity(self.du, self.du),
            b: DVector::zeros(self.du),
        };
        for &s in w.iter().rev() {
            m = self.inverse_unstable[s].compose(&m);
        }
        m
    }

    /// `h_{w_{-1}} o ... o h_{w_{-n}}` for a past `w = (w_{-n}, ..., w_{-1})` in time order.
    pub(crate) fn stable_cylinder_map(&self, past: &[usize]) -> Affine {
        let mut m = Affine {
            a: DMatrix::identity(self.ds, self.ds),
            b: DVector::zeros(self.ds),
        };
        for &s in past {
            m = self.stable_maps[s].compose(&m);
        }
        m
    }

    /// Applies the dynamics on the rectangle containing `(x, y)`, identified
    /// from the unstable coordinate.
    pub fn forward(&self, x: &DVector<f64>, y: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
        let i = self.branch_of(x)?;
        let b = &self.branches[i];
        Some((&b.expansion * (x - &b.unstable_offset), &b.contraction * y + &b.stable_offset))
    }

    /// The branch whose unstable strip contains `x`.
    pub fn branch_of(&self, x: &DVector<f64>) -> Option<usize> {
        self.inverse_unstable.iter().position(|g| {
            let (lo, hi) = image_box(g);
            (0..self.du).all(|k| x[k] >= lo[k] - 1e-12 && x[k] <= hi[k] + 1e-12)
        })
    }
}
