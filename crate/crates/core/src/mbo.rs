//! Pseudospectral Balanced TV MBO iteration.
//!
//! Each iteration diffuses the current partition matrix under `e^{-dt M}`
//! in the truncated eigenbasis, relaxes supervised entries toward their
//! targets, and thresholds every row to its largest entry. The iteration
//! stops when two consecutive thresholded partitions coincide.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::EigenBasis;
use crate::energy;
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::partition::{Labels, PartitionMatrix, Supervision};

/// How the initial partition is drawn when the caller does not pass one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitKind {
    /// Independent uniform labels from the run seed.
    #[default]
    Random,
    /// k-means on the leading eigenvector rows.
    KMeans,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MboConfig {
    pub gamma: f64,
    pub nhat: usize,
    /// Eigenbasis size; `None` means `5 · n̂`.
    pub n_eig: Option<usize>,
    /// Explicit timestep; `None` selects one from the spectrum.
    pub dt: Option<f64>,
    /// Target size `ε` in the decay-time upper bound.
    pub decay_epsilon: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Continue from the fixed point with a smaller timestep.
    pub refine: bool,
    pub refine_factor: f64,
    pub init: InitKind,
}

impl MboConfig {
    pub fn new(gamma: f64, nhat: usize) -> Self {
        MboConfig {
            gamma,
            nhat,
            n_eig: None,
            dt: None,
            decay_epsilon: 1.0,
            max_iters: 300,
            seed: 0,
            refine: true,
            refine_factor: 0.1,
            init: InitKind::Random,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_nhat(mut self, nhat: usize) -> Self {
        self.nhat = nhat;
        self
    }

    pub fn n_eig(&self) -> usize {
        self.n_eig.unwrap_or(5 * self.nhat)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::param("gamma", format!("must be positive, got {}", self.gamma)));
        }
        if self.nhat == 0 {
            return Err(Error::param("nhat", "must be at least 1"));
        }
        if self.n_eig == Some(0) {
            return Err(Error::param("n_eig", "must be at least 1"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::param("dt", format!("must be positive, got {dt}")));
            }
        }
        if !(self.decay_epsilon > 0.0) {
            return Err(Error::param("decay_epsilon", "must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        if !(self.refine_factor > 0.0 && self.refine_factor < 1.0) {
            return Err(Error::param("refine_factor", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MboResult {
    pub labels: Labels,
    pub u: PartitionMatrix,
    /// Total iterations across the main and refinement phases.
    pub iterations: usize,
    /// Timestep of the main phase.
    pub dt_used: f64,
    /// Timestep of the refinement phase, if it ran.
    pub dt_refined: Option<f64>,
    /// Balanced TV of each thresholded iterate.
    pub energy_trace: Vec<f64>,
    pub modularity: f64,
    /// `false` when a phase hit `max_iters` before becoming stationary.
    pub converged: bool,
}

impl MboResult {
    /// `(iteration, balanced TV, modularity)` rows for trace output.
    pub fn trace_rows(&self, two_m: f64) -> Vec<(usize, f64, f64)> {
        self.energy_trace
            .iter()
            .enumerate()
            .map(|(i, &e)| (i + 1, e, 1.0 - e / two_m))
            .collect()
    }
}

/// Largest timestep at which one exact two-class MBO step provably leaves
/// every partition unchanged: `log 2 / (2(γ+1) k_max)`.
pub fn freezing_timestep(graph: &SparseGraph, gamma: f64) -> f64 {
    LN_2 / (2.0 * (gamma + 1.0) * graph.max_degree())
}

/// Time after which `‖e^{-τM} u₀‖` has decayed below `ε` for any partition
/// matrix `u₀` (Frobenius norm `√N`): `λ₁⁻¹ log(√N / ε)`.
pub fn decay_timestep(lambda_1: f64, n_nodes: usize, epsilon: f64) -> f64 {
    if lambda_1 <= 0.0 {
        return f64::INFINITY;
    }
    ((n_nodes as f64).sqrt() / epsilon).ln() / lambda_1
}

/// Geometric mean of the freezing and decay timesteps, clamped to
/// `[τ_lo, 10³ τ_lo]`. An explicit `config.dt` is returned unchanged.
pub fn select_timestep(basis: &EigenBasis, graph: &SparseGraph, config: &MboConfig) -> f64 {
    if let Some(dt) = config.dt {
        return dt;
    }
    let lo = freezing_timestep(graph, config.gamma);
    let cap = 1e3 * lo;
    let hi = decay_timestep(basis.lambda_1, graph.n_nodes(), config.decay_epsilon);
    let dt = (lo * hi).sqrt();
    if dt.is_nan() {
        return cap;
    }
    dt.clamp(lo, cap)
}

fn check_basis_rows(basis: &EigenBasis, u: &DMatrix<f64>) -> Result<()> {
    if basis.n_nodes() != u.nrows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} rows", basis.n_nodes()),
            actual: format!("{} rows", u.nrows()),
        });
    }
    Ok(())
}

/// `V e^{-dt D} Vᵀ u`, the exact flow projected onto the basis span.
pub fn diffuse(basis: &EigenBasis, u: &DMatrix<f64>, dt: f64) -> Result<DMatrix<f64>> {
    if !(dt > 0.0) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    check_basis_rows(basis, u)?;
    let v = &basis.eigenvectors;
    let mut coeffs = v.tr_mul(u);
    for (i, &lambda) in basis.eigenvalues.iter().enumerate() {
        let decay = (-dt * lambda).exp();
        coeffs.row_mut(i).scale_mut(decay);
    }
    Ok(v * coeffs)
}

/// Exact solve of `u_t = -2λ χ∘(u - f)` over one timestep: masked entries
/// relax as `f + (u - f) e^{-2λ dt}`, unmasked ones are untouched.
pub fn fidelity_step(u: &DMatrix<f64>, sup: &Supervision, dt: f64) -> Result<DMatrix<f64>> {
    if !(dt > 0.0) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    sup.check_shape(u.nrows(), u.ncols())?;
    let mut out = u.clone();
    let factor = (-2.0 * sup.weight() * dt).exp();
    for e in sup.entries() {
        let x = &mut out[(e.node, e.community)];
        *x = e.target + (*x - e.target) * factor;
    }
    Ok(out)
}

/// Row-wise one-hot at the argmax; ties go to the lowest column.
pub fn threshold(u: &DMatrix<f64>) -> Result<PartitionMatrix> {
    if u.ncols() == 0 {
        return Err(Error::param("u", "needs at least one column"));
    }
    let mut labels = Vec::with_capacity(u.nrows());
    for i in 0..u.nrows() {
        let mut best = 0;
        for l in 0..u.ncols() {
            let x = u[(i, l)];
            if x.is_nan() {
                return Err(Error::NonFinite("threshold input"));
            }
            if x > u[(i, best)] {
                best = l;
            }
        }
        labels.push(best);
    }
    PartitionMatrix::from_labels(&Labels::new(labels), u.ncols())
}

/// Uniform i.i.d. labels in `0..nhat`.
pub fn random_partition(n_nodes: usize, nhat: usize, seed: u64) -> Result<PartitionMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = (0..n_nodes).map(|_| rng.random_range(0..nhat)).collect();
    PartitionMatrix::from_labels(&Labels::new(labels), nhat)
}

/// Moves every node with a unit supervision target into that community.
fn seed_known_rows(p: PartitionMatrix, sup: &Supervision) -> Result<PartitionMatrix> {
    let mut labels = p.to_labels().into_inner();
    for e in sup.entries().iter().filter(|e| e.target == 1.0) {
        labels[e.node] = e.community;
    }
    PartitionMatrix::from_labels(&Labels::new(labels), p.n_communities())
}

/// Runs the MBO scheme to a stationary partition.
///
/// `basis` must belong to `M` for this graph and `config.gamma`. When `init`
/// is absent the initial partition comes from `config.init`, with supervised
/// nodes starting in their known communities.
pub fn mbo_run(
    graph: &SparseGraph,
    basis: &EigenBasis,
    config: &MboConfig,
    sup: Option<&Supervision>,
    init: Option<&PartitionMatrix>,
) -> Result<MboResult> {
    config.validate()?;
    let n = graph.n_nodes();
    if basis.n_nodes() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("basis for {n} nodes"),
            actual: format!("basis for {} nodes", basis.n_nodes()),
        });
    }
    if basis.gamma != config.gamma {
        return Err(Error::param(
            "basis",
            format!("computed for gamma {} but config has {}", basis.gamma, config.gamma),
        ));
    }
    let nhat = config.nhat;
    if let Some(s) = sup {
        s.check_shape(n, nhat)?;
    }
    let mut current = match init {
        Some(p) => {
            if p.n_nodes() != n || p.n_communities() != nhat {
                return Err(Error::DimensionMismatch {
                    expected: format!("{n} × {nhat} initial partition"),
                    actual: format!("{} × {}", p.n_nodes(), p.n_communities()),
                });
            }
            p.clone()
        }
        None => {
            let generated = match config.init {
                InitKind::Random => random_partition(n, nhat, config.seed)?,
                InitKind::KMeans => crate::partitioner::kmeans_init(basis, nhat, config.seed)?,
            };
            match sup {
                Some(s) => seed_known_rows(generated, s)?,
                None => generated,
            }
        }
    };

    let dt = select_timestep(basis, graph, config);
    let mut phases = vec![dt];
    if config.refine {
        phases.push(dt * config.refine_factor);
    }
    let mut iterations = 0;
    let mut converged = true;
    let mut trace = Vec::new();
    if nhat > 1 {
        for (phase, &step) in phases.iter().enumerate() {
            let mut stationary = false;
            for _ in 0..config.max_iters {
                let mut u = diffuse(basis, &current.to_dense(), step)?;
                if let Some(s) = sup {
                    u = fidelity_step(&u, s, step)?;
                }
                let next = threshold(&u)?;
                iterations += 1;
                trace.push(energy::balanced_cut_i(graph, &next.to_labels(), config.gamma)?);
                if next == current {
                    stationary = true;
                    break;
                }
                current = next;
            }
            if !stationary {
                converged = false;
                log::warn!(
                    "MBO phase {phase} (dt = {step:.4e}) reached {} iterations without becoming stationary",
                    config.max_iters
                );
            }
        }
    }
    let labels = current.to_labels();
    let modularity = energy::modularity(graph, &labels, config.gamma)?;
    Ok(MboResult {
        labels,
        u: current,
        iterations,
        dt_used: dt,
        dt_refined: if config.refine && nhat > 1 { phases.get(1).copied() } else { None },
        energy_trace: trace,
        modularity,
        converged,
    })
}
