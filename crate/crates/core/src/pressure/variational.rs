//! Variational principle checks: maximise `h_mu + Phi_*(mu)` over Markov
//! measures of a given memory and compare with the pressure.
//!
//! A memory-`m` Markov measure is a one-step Markov measure on the `m`-block
//! presentation of the subshift, so the search space is a product of
//! simplices (one per admissible `m`-word, over its admissible successors).
//! The optimiser is projected gradient ascent with backtracking and random
//! restarts; gradients are central finite differences of the row-normalised
//! objective, projected onto the row-sum-zero subspace.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{additive_pressure, cylinder_potentials, cylinder_pressure_level, EdgePotential, PotentialSpec, MODULE};
use crate::error::{Error, Result};
use crate::linalg;
use crate::symbolic::{enumerate_words, markov_entropy, Budget, MarkovMeasure, SubshiftSpec, Word};

/// Smallest probability kept on an admissible transition during the search.
const FLOOR: f64 = 1e-12;
const FD_STEP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Stop a restart when an accepted step improves the objective by less than this.
    pub improvement_tol: f64,
}

impl Default for VariationalOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iters: 10_000,
            seed: 0,
            improvement_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VariationalResult {
    /// Best `h_mu + Phi_*(mu)` found.
    pub best_value: f64,
    /// Pressure the optimum is compared against.
    pub pressure_ref: f64,
    /// `pressure_ref - best_value`; nonnegative by the variational inequality.
    pub gap: f64,
    /// Maximiser, as a one-step chain on the `memory`-block presentation.
    pub argmax: MarkovMeasure,
    /// State labels of `argmax` (admissible words of length `memory`).
    pub block_states: Vec<Word>,
    pub memory: usize,
    pub depth: usize,
    /// Whether the winning restart met the improvement tolerance before the iteration cap.
    pub converged: bool,
    pub winning_restart: usize,
    /// Equality of the supremum and the pressure is only asserted for
    /// additive potentials; for singular-value families it is reported.
    pub equality_asserted: bool,
}

/// The `m`-block presentation: admissible `m`-words with `u -> v` iff
/// `v` continues `u` by one symbol.
pub fn higher_block(spec: &SubshiftSpec, memory: usize, budget: &Budget) -> Result<(SubshiftSpec, Vec<Word>)> {
    let states: Vec<Word> = enumerate_words(spec, memory, budget)?.collect();
    let n = states.len();
    let rows = (0..n)
        .map(|i| {
            let u = states[i].symbols();
            (0..n)
                .map(|j| {
                    let v = states[j].symbols();
                    (u[1..] == v[..memory - 1] && spec.allowed(*u.last().unwrap(), *v.last().unwrap())) as u8
                })
                .collect()
        })
        .collect();
    Ok((SubshiftSpec::new(rows)?, states))
}

/// Objective evaluator for a fixed potential on the block presentation.
struct Objective {
    kind: ObjectiveKind,
}

/// Start state, chain of block transitions, `phi_n / n`.
type Cylinder = (usize, Vec<(usize, usize)>, f64);

enum ObjectiveKind {
    /// Lifted edge values on block transitions.
    Edge(DMatrix<f64>),
    /// Depth-`n` cylinders.
    Cylinders(Vec<Cylinder>),
}

impl Objective {
    fn value(&self, p: &DMatrix<f64>) -> Option<f64> {
        let pi = linalg::stationary_vector(p).ok()?;
        let h = chain_entropy(p, &pi);
        let phi = match &self.kind {
            ObjectiveKind::Edge(f) => {
                let n = p.nrows();
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let w = pi[i] * p[(i, j)];
                        if w > 0.0 {
                            acc += w * f[(i, j)];
                        }
                    }
                }
                acc
            }
            ObjectiveKind::Cylinders(cyls) => cyls
                .iter()
                .map(|(s0, chain, phi)| {
                    let mass = chain.iter().fold(pi[*s0], |a, &(i, j)| a * p[(i, j)]);
                    mass * phi
                })
                .sum(),
        };
        let v = h + phi;
        v.is_finite().then_some(v)
    }
}

/// Same formula as [`markov_entropy`] without re-validating the chain.
fn chain_entropy(p: &DMatrix<f64>, pi: &nalgebra::DVector<f64>) -> f64 {
    let n = p.nrows();
    let mut h = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = p[(i, j)];
            if v > 0.0 {
                h -= pi[i] * v * v.ln();
            }
        }
    }
    h
}

/// Euclidean projection of `x` onto `{y >= floor, sum y = 1}`.
fn project_simplex(x: &mut [f64], floor: f64) {
    let k = x.len();
    let total = 1.0 - floor * k as f64;
    let mut u: Vec<f64> = x.iter().map(|v| v - floor).collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let cand = (cum - total) / (i + 1) as f64;
        if ui - cand > 0.0 {
            theta = cand;
        }
    }
    for v in x.iter_mut() {
        *v = (*v - floor - theta).max(0.0) + floor;
    }
}

fn normalize_rows(p: &mut DMatrix<f64>) {
    for i in 0..p.nrows() {
        let s: f64 = p.row(i).sum();
        for j in 0..p.ncols() {
            p[(i, j)] /= s;
        }
    }
}

struct RestartOutcome {
    value: f64,
    p: DMatrix<f64>,
    converged: bool,
}

fn ascend(obj: &Objective, support: &[Vec<usize>], mut p: DMatrix<f64>, max_iters: usize, tol: f64) -> Result<RestartOutcome> {
    let n = p.nrows();
    let mut value = obj
        .value(&p)
        .ok_or_else(|| Error::numeric(MODULE, "objective undefined at the starting measure"))?;
    let mut step = 0.1;
    let mut converged = false;
    for _ in 0..max_iters {
        // projected finite-difference gradient
        let mut grad = DMatrix::zeros(n, n);
        for i in 0..n {
            if support[i].len() < 2 {
                continue;
            }
            for &j in &support[i] {
                let h = FD_STEP;
                let eval = |delta: f64| {
                    let mut q = p.clone();
                    q[(i, j)] += delta;
                    normalize_rows(&mut q);
                    obj.value(&q)
                };
                let g = if p[(i, j)] > 2.0 * h {
                    match (eval(h), eval(-h)) {
                        (Some(a), Some(b)) => (a - b) / (2.0 * h),
                        _ => 0.0,
                    }
                } else {
                    eval(h).map_or(0.0, |a| (a - value) / h)
                };
                grad[(i, j)] = g;
            }
            let mean = support[i].iter().map(|&j| grad[(i, j)]).sum::<f64>() / support[i].len() as f64;
            for &j in &support[i] {
                grad[(i, j)] -= mean;
            }
        }
        let mut accepted = false;
        while step > 1e-16 {
            let mut cand = p.clone();
            for i in 0..n {
                if support[i].len() < 2 {
                    continue;
                }
                let mut row: Vec<f64> = support[i].iter().map(|&j| p[(i, j)] + step * grad[(i, j)]).collect();
                project_simplex(&mut row, FLOOR);
                for (v, &j) in row.iter().zip(&support[i]) {
                    cand[(i, j)] = *v;
                }
            }
            match obj.value(&cand) {
                Some(v) if v > value => {
                    let gain = v - value;
                    p = cand;
                    value = v;
                    step *= 2.0;
                    accepted = true;
                    if gain < tol {
                        converged = true;
                    }
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            // no ascent direction at machine resolution: stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }
    Ok(RestartOutcome { value, p, converged })
}

/// Maximises `h_mu + Phi_*(mu)` over memory-`memory` Markov measures.
///
/// For edge potentials `Phi_*` is the exact integral and the reference is
/// the transfer-matrix pressure. For singular-value potentials `Phi_*` is
/// truncated at `depth` as `(1/depth) sum_{|w| = depth} mu[w] phi_depth(w)`
/// and the reference is the level-`depth` cylinder pressure, for which the
/// inequality `best_value <= pressure_ref` holds exactly.
pub fn variational_gap(
    spec: &SubshiftSpec,
    potential: &PotentialSpec<'_>,
    memory: usize,
    depth: usize,
    options: &VariationalOptions,
    budget: &Budget,
) -> Result<VariationalResult> {
    if memory == 0 {
        return Err(Error::domain(MODULE, "memory must be at least 1"));
    }
    if depth < memory {
        return Err(Error::domain(MODULE, format!("depth {depth} must be at least the memory {memory}")));
    }
    spec.require_irreducible(MODULE)?;
    let (hb, states) = higher_block(spec, memory, budget)?;
    let ns = states.len();
    let index = |w: &[usize]| states.binary_search_by(|s| s.symbols().cmp(w)).ok();

    let (kind, pressure_ref, equality_asserted) = match potential {
        PotentialSpec::Edge(e) => {
            let lifted = DMatrix::from_fn(ns, ns, |i, j| {
                if hb.allowed(i, j) {
                    e.value(states[i].last().unwrap(), states[j].last().unwrap())
                } else {
                    0.0
                }
            });
            (ObjectiveKind::Edge(lifted), additive_pressure(spec, e)?.value, true)
        }
        PotentialSpec::Singular { .. } => {
            let cyl = cylinder_potentials(spec, potential, depth, budget)?;
            let mut out = Vec::with_capacity(cyl.len());
            for (w, phi) in cyl {
                let s = w.symbols();
                let s0 = index(&s[..memory]).expect("prefix of admissible word is a state");
                let mut chain = Vec::with_capacity(depth - memory);
                let mut cur = s0;
                for end in (memory + 1)..=depth {
                    let nxt = index(&s[end - memory..end]).expect("window of admissible word is a state");
                    chain.push((cur, nxt));
                    cur = nxt;
                }
                out.push((s0, chain, phi / depth as f64));
            }
            let pref = cylinder_pressure_level(spec, potential, depth, budget)?.value;
            (ObjectiveKind::Cylinders(out), pref, false)
        }
    };
    let obj = Objective { kind };
    let support: Vec<Vec<usize>> = (0..ns).map(|i| (0..ns).filter(|&j| hb.allowed(i, j)).collect()).collect();

    let outcomes: Vec<Result<RestartOutcome>> = (0..options.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(r as u64 + 1)));
            let mut p = DMatrix::zeros(ns, ns);
            for i in 0..ns {
                for &j in &support[i] {
                    p[(i, j)] = if r == 0 { 1.0 } else { rng.random_range(0.05..1.0) };
                }
            }
            normalize_rows(&mut p);
            ascend(&obj, &support, p, options.max_iters, options.improvement_tol)
        })
        .collect();

    // winner: largest value, ties to the lowest restart index
    let mut best: Option<(usize, RestartOutcome)> = None;
    for (r, o) in outcomes.into_iter().enumerate() {
        let o = o?;
        if best.as_ref().is_none_or(|(_, b)| o.value > b.value) {
            best = Some((r, o));
        }
    }
    let (winning_restart, best) = best.expect("at least one restart");
    let argmax = MarkovMeasure::new(&hb, best.p)?;
    Ok(VariationalResult {
        best_value: best.value,
        pressure_ref,
        gap: pressure_ref - best.value,
        argmax,
        block_states: states,
        memory,
        depth,
        converged: best.converged,
        winning_restart,
        equality_asserted,
    })
}

/// `h_mu + Phi_*(mu)` for a one-step Markov measure on `spec`.
///
/// Exact for edge potentials; for singular potentials `Phi_*` is truncated at
/// `depth` as `(1/n) int phi_n dmu`, which keeps the variational inequality
/// against the level-`depth` cylinder pressure exact.
pub fn free_energy(
    spec: &SubshiftSpec,
    measure: &MarkovMeasure,
    potential: &PotentialSpec<'_>,
    depth: usize,
    budget: &Budget,
) -> Result<f64> {
    if measure.alphabet_size() != spec.alphabet_size() {
        return Err(Error::domain(MODULE, "measure and subshift have different alphabets"));
    }
    let h = markov_entropy(measure);
    let phi = match potential {
        PotentialSpec::Edge(e) => crate::symbolic::integrate_edge_function(measure, |i, j| e.value(i, j)),
        PotentialSpec::Singular { .. } => {
            if depth == 0 {
                return Err(Error::domain(MODULE, "truncation depth must be at least 1"));
            }
            cylinder_potentials(spec, potential, depth, budget)?
                .iter()
                .map(|(w, phi)| measure.cylinder(w.symbols()) * phi)
                .sum::<f64>()
                / depth as f64
        }
    };
    Ok(h + phi)
}

/// Equilibrium state of an edge potential in closed form:
/// `P_ij = W_ij r_j / (rho r_i)` with `r` the right Perron vector of
/// `W_ij = A_ij exp(f(i, j))`.
pub fn gibbs_measure(spec: &SubshiftSpec, potential: &EdgePotential) -> Result<MarkovMeasure> {
    spec.require_irreducible(MODULE)?;
    let q = spec.alphabet_size();
    let w = DMatrix::from_fn(q, q, |i, j| if spec.allowed(i, j) { potential.value(i, j).exp() } else { 0.0 });
    let (rho, r) = linalg::perron_pair(&w)?;
    let mut p = DMatrix::from_fn(q, q, |i, j| w[(i, j)] * r[j] / (rho * r[i]));
    normalize_rows(&mut p);
    MarkovMeasure::new(spec, p)
}
