//! Affine horseshoes, sampling of the invariant set and its local manifolds,
//! box counting and Hölder fits for conjugacies.

pub mod boxcount;
pub mod holder;
pub mod model;
pub mod sampling;

pub(crate) const MODULE: &str = "geometry";

pub use boxcount::{auto_dyadic_scales, box_count, box_count_auto, BoxCountResult};
pub use holder::{holder_exponent_fit, HolderFit};
pub use model::{AffineBranch, HorseshoeModel};
pub use sampling::{
    balanced_depths, sample_invariant_set, sample_product, sample_stable_slice, sample_unstable_slice, PointCloud,
};
