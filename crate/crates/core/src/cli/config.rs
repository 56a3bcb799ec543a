//! TOML run configuration. Unknown keys are rejected at every level.
//!
//! ```toml
//! task = "dim"            # entropy | pressure | dim | boxcount | sweep | holder | verify
//! seed = 7                # required by boxcount, holder and verify
//!
//! [model]
//! kind = "linear"         # linear | affine | cocycle
//! branches = 2
//! mu = 3.0
//! lambda = 0.2
//!
//! [numerics]
//! k_max = 4
//! tol = 1e-10
//!
//! [sweep]
//! parameter = "mu"
//! start = 3.0
//! stop = 5.0
//! step = 0.05
//! ```
//!
//! `kind = "affine"` takes `coding` (0/1 rows, default full shift), `min_gap`
//! and a `[[model.branch]]` array with `expansion`, `unstable_offset`,
//! `contraction` and `stable_offset`. `kind = "cocycle"` takes `coding` and
//! the generator lists `unstable` and `stable` (one matrix per symbol); it
//! has no geometry, so only entropy, pressure and dim apply.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cocycle::{MatrixCocycle, Orientation};
use crate::error::{Error, Result};
use crate::geometry::{AffineBranch, HorseshoeModel};
use crate::symbolic::{Budget, SubshiftSpec, DEFAULT_MAX_WORDS};

const MODULE: &str = "cli";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Entropy,
    Pressure,
    Dim,
    Boxcount,
    Sweep,
    Holder,
    Verify,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Entropy => "entropy",
            Task::Pressure => "pressure",
            Task::Dim => "dim",
            Task::Boxcount => "boxcount",
            Task::Sweep => "sweep",
            Task::Holder => "holder",
            Task::Verify => "verify",
        }
    }

    pub fn needs_seed(self) -> bool {
        matches!(self, Task::Boxcount | Task::Holder | Task::Verify)
    }

    pub fn needs_model(self) -> bool {
        self != Task::Verify
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "entropy" => Task::Entropy,
            "pressure" => Task::Pressure,
            "dim" => Task::Dim,
            "boxcount" => Task::Boxcount,
            "sweep" => Task::Sweep,
            "holder" => Task::Holder,
            "verify" => Task::Verify,
            other => {
                return Err(Error::parse(
                    MODULE,
                    format!("unknown task {other:?}; expected entropy, pressure, dim, boxcount, sweep, holder or verify"),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Affine,
    Cocycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub expansion: Vec<Vec<f64>>,
    pub unstable_offset: Vec<f64>,
    pub contraction: Vec<Vec<f64>>,
    pub stable_offset: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub branches: Option<usize>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub coding: Option<Vec<Vec<u8>>>,
    pub min_gap: Option<f64>,
    pub branch: Option<Vec<BranchConfig>>,
    pub unstable: Option<Vec<Vec<Vec<f64>>>>,
    pub stable: Option<Vec<Vec<Vec<f64>>>>,
    /// Steps after which the cocycles expand/contract, if not after one.
    pub block_length: Option<usize>,
}

/// A validated model: always a coding and two cocycles, plus the geometry
/// when the model is a horseshoe.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: SubshiftSpec,
    pub unstable: MatrixCocycle,
    pub stable: MatrixCocycle,
    pub horseshoe: Option<HorseshoeModel>,
}

impl Model {
    pub fn from_horseshoe(h: HorseshoeModel) -> Result<Self> {
        Ok(Self {
            spec: h.coding().clone(),
            unstable: h.unstable_cocycle()?,
            stable: h.stable_cocycle()?,
            horseshoe: Some(h),
        })
    }

    pub fn horseshoe(&self, task: Task) -> Result<&HorseshoeModel> {
        self.horseshoe
            .as_ref()
            .ok_or_else(|| Error::domain(MODULE, format!("task {task} needs a horseshoe model (kind linear or affine)")))
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::parse(MODULE, format!("{what} must be a nonempty square matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl ModelConfig {
    fn reject(&self, fields: &[(&str, bool)]) -> Result<()> {
        for (name, present) in fields {
            if *present {
                return Err(Error::parse(
                    MODULE,
                    format!("model field {name:?} is not used by kind {:?}", self.kind),
                ));
            }
        }
        Ok(())
    }

    fn coding(&self, default_q: usize) -> Result<SubshiftSpec> {
        match &self.coding {
            Some(rows) => SubshiftSpec::new(rows.clone()),
            None => Ok(SubshiftSpec::full_shift(default_q)),
        }
    }

    pub fn build(&self) -> Result<Model> {
        match self.kind {
            ModelKind::Linear => {
                self.reject(&[
                    ("coding", self.coding.is_some()),
                    ("min_gap", self.min_gap.is_some()),
                    ("branch", self.branch.is_some()),
                    ("unstable", self.unstable.is_some()),
                    ("stable", self.stable.is_some()),
                    ("block_length", self.block_length.is_some()),
                ])?;
                let mu = self.mu.ok_or_else(|| Error::parse(MODULE, "linear model needs mu"))?;
                let lambda = self.lambda.ok_or_else(|| Error::parse(MODULE, "linear model needs lambda"))?;
                Model::from_horseshoe(HorseshoeModel::linear(self.branches.unwrap_or(2), mu, lambda)?)
            }
            ModelKind::Affine => {
                self.reject(&[
                    ("branches", self.branches.is_some()),
                    ("mu", self.mu.is_some()),
                    ("lambda", self.lambda.is_some()),
                    ("unstable", self.unstable.is_some()),
                    ("stable", self.stable.is_some()),
                    ("block_length", self.block_length.is_some()),
                ])?;
                let cfgs = self.branch.as_ref().ok_or_else(|| Error::parse(MODULE, "affine model needs [[model.branch]] entries"))?;
                let branches = cfgs
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        Ok(AffineBranch {
                            expansion: matrix(&b.expansion, &format!("branch {i} expansion"))?,
                            unstable_offset: DVector::from_vec(b.unstable_offset.clone()),
                            contraction: matrix(&b.contraction, &format!("branch {i} contraction"))?,
                            stable_offset: DVector::from_vec(b.stable_offset.clone()),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let spec = self.coding(branches.len())?;
                Model::from_horseshoe(HorseshoeModel::new(spec, branches, self.min_gap.unwrap_or(0.0))?)
            }
            ModelKind::Cocycle => {
                self.reject(&[
                    ("branches", self.branches.is_some()),
                    ("mu", self.mu.is_some()),
                    ("lambda", self.lambda.is_some()),
                    ("min_gap", self.min_gap.is_some()),
                    ("branch", self.branch.is_some()),
                ])?;
                let gens = |list: &Option<Vec<Vec<Vec<f64>>>>, what: &str| -> Result<Vec<DMatrix<f64>>> {
                    list.as_ref()
                        .ok_or_else(|| Error::parse(MODULE, format!("cocycle model needs {what} generators")))?
                        .iter()
                        .enumerate()
                        .map(|(i, m)| matrix(m, &format!("{what} generator {i}")))
                        .collect()
                };
                let u = gens(&self.unstable, "unstable")?;
                let s = gens(&self.stable, "stable")?;
                let spec = self.coding(u.len())?;
                let mut unstable = MatrixCocycle::new(Orientation::Unstable, u)?;
                let mut stable = MatrixCocycle::new(Orientation::Stable, s)?;
                if let Some(l) = self.block_length {
                    unstable = unstable.with_block_length(l);
                    stable = stable.with_block_length(l);
                }
                Ok(Model {
                    spec,
                    unstable,
                    stable,
                    horseshoe: None,
                })
            }
        }
    }

    /// The same model with `mu` or `lambda` replaced (linear models only).
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<ModelConfig> {
        if self.kind != ModelKind::Linear {
            return Err(Error::domain(MODULE, "sweeps vary mu or lambda of a linear model"));
        }
        let mut c = self.clone();
        match parameter {
            SweepParameter::Mu => c.mu = Some(value),
            SweepParameter::Lambda => c.lambda = Some(value),
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// Deepest block level; default is the largest the budget allows.
    pub k_max: Option<u32>,
    #[serde(default = "defaults::tol")]
    pub tol: f64,
    #[serde(default = "defaults::defect_tolerance")]
    pub defect_tolerance: f64,
    #[serde(default = "defaults::max_words")]
    pub max_words: u64,
    /// Sampling depth in both time directions; default balances the two sides.
    pub depth: Option<usize>,
    /// Box-counting scales; default is the automatic dyadic rule.
    pub scales: Option<Vec<f64>>,
    #[serde(default = "defaults::slice_depth")]
    pub slice_depth: usize,
    #[serde(default = "defaults::t_max")]
    pub t_max: f64,
    #[serde(default = "defaults::t_points")]
    pub t_points: usize,
    #[serde(default = "defaults::entropy_levels")]
    pub entropy_levels: usize,
    #[serde(default)]
    pub write_points: bool,
}

mod defaults {
    pub fn tol() -> f64 {
        crate::dimension::DEFAULT_ROOT_TOL
    }
    pub fn defect_tolerance() -> f64 {
        crate::dimension::DEFAULT_DEFECT_TOL
    }
    pub fn max_words() -> u64 {
        super::DEFAULT_MAX_WORDS as u64
    }
    pub fn slice_depth() -> usize {
        14
    }
    pub fn t_max() -> f64 {
        2.0
    }
    pub fn t_points() -> usize {
        41
    }
    pub fn entropy_levels() -> usize {
        16
    }
    pub fn depth() -> usize {
        20
    }
    pub fn pairs() -> usize {
        2000
    }
}

impl Default for Numerics {
    fn default() -> Self {
        toml::from_str("").expect("all numerics have defaults")
    }
}

impl Numerics {
    pub fn budget(&self) -> Budget {
        Budget::new(self.max_words as u128)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::parse(MODULE, m));
        if !(self.tol > 0.0 && self.tol <= 1e-3) {
            return bad(format!("tol must be in (0, 1e-3], got {}", self.tol));
        }
        if !(self.defect_tolerance > 0.0 && self.defect_tolerance < 1.0) {
            return bad(format!("defect_tolerance must be in (0, 1), got {}", self.defect_tolerance));
        }
        if !(1..=1u64 << 40).contains(&self.max_words) {
            return bad(format!("max_words must be in 1..=2^40, got {}", self.max_words));
        }
        if self.k_max.is_some_and(|k| k > 30) {
            return bad("k_max must be at most 30".into());
        }
        if self.depth.is_some_and(|d| !(1..=64).contains(&d)) || !(1..=64).contains(&self.slice_depth) {
            return bad("depth and slice_depth must be in 1..=64".into());
        }
        if let Some(s) = &self.scales {
            if s.len() < 4 || s.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
                return bad("scales needs at least 4 positive finite entries".into());
            }
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) || self.t_points < 2 || self.t_points > 10_000 {
            return bad("t_max must be positive and t_points in 2..=10000".into());
        }
        if !(1..=64).contains(&self.entropy_levels) {
            return bad("entropy_levels must be in 1..=64".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Mu,
    Lambda,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Mu => "mu",
            SweepParameter::Lambda => "lambda",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderConfig {
    /// The second model; shares the coding of `[model]`.
    pub other: ModelConfig,
    #[serde(default = "defaults::depth")]
    pub depth: usize,
    #[serde(default = "defaults::pairs")]
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub seed: Option<u64>,
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub numerics: Numerics,
    pub sweep: Option<SweepConfig>,
    pub holder: Option<HolderConfig>,
    /// Output directory, relative to the working directory.
    pub out: Option<String>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(MODULE, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::parse(MODULE, format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks knob ranges and task requirements.
    pub fn validate(&self) -> Result<()> {
        self.numerics.validate()?;
        if self.task.needs_seed() && self.seed.is_none() {
            return Err(Error::parse(MODULE, format!("task {} samples and needs a seed", self.task)));
        }
        if self.task.needs_model() && self.model.is_none() {
            return Err(Error::parse(MODULE, format!("task {} needs a [model] section", self.task)));
        }
        if self.task == Task::Sweep {
            let s = self.sweep.as_ref().ok_or_else(|| Error::parse(MODULE, "task sweep needs a [sweep] section"))?;
            if !(s.step > 0.0) || !(s.stop >= s.start) || (s.stop - s.start) / s.step > 10_000.0 {
                return Err(Error::parse(MODULE, "sweep needs start <= stop, step > 0 and at most 10^4 points"));
            }
        }
        if self.task == Task::Holder {
            let h = self.holder.as_ref().ok_or_else(|| Error::parse(MODULE, "task holder needs a [holder] section"))?;
            if !(2..=64).contains(&h.depth) || !(3..=1_000_000).contains(&h.pairs) {
                return Err(Error::parse(MODULE, "holder depth must be in 2..=64 and pairs in 3..=10^6"));
            }
        }
        Ok(())
    }
}
