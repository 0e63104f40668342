//! The diffusion operator `M = L + (γ/m) k kᵀ` and its smallest eigenpairs.
//!
//! `M` is applied matrix-free in `O(nnz)`: the rank-one term is folded in as
//! `(γ/m) k (kᵀv)`. The eigensolver is a block Krylov method with thick
//! restarts: the basis is extended by the residual block of the wanted Ritz
//! pairs, Rayleigh-Ritz is done on the projected matrix `Vᵀ M V`, and when the
//! basis is full it is compressed onto the leading Ritz vectors. Because `M`
//! is positive semi-definite with `‖M‖ ≤ 2(1+γ)k_max`, the lower end of the
//! spectrum is targeted directly without shift-invert.

mod cache;

pub use cache::{read_basis, write_basis, EigenCache, CACHE_MAGIC};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;

/// Matrix-free `M = diag(k) - W + (γ/m) k kᵀ` over a borrowed graph.
#[derive(Debug, Clone, Copy)]
pub struct OperatorM<'g> {
    graph: &'g SparseGraph,
    gamma: f64,
    m: f64,
}

impl<'g> OperatorM<'g> {
    pub fn new(graph: &'g SparseGraph, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::param("gamma", format!("must be positive and finite, got {gamma}")));
        }
        let m = graph.total_weight() / 2.0;
        if m <= 0.0 {
            return Err(Error::EmptyGraph);
        }
        Ok(OperatorM { graph, gamma, m })
    }

    pub fn graph(&self) -> &'g SparseGraph {
        self.graph
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.graph.n_nodes()
    }

    /// Writes `M v` into `out`.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.dim();
        if v.len() != n || out.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("vectors of length {n}"),
                actual: format!("input {} / output {}", v.len(), out.len()),
            });
        }
        let k = self.graph.degrees();
        let kv: f64 = k.iter().zip(v).map(|(a, b)| a * b).sum();
        let scale = self.gamma / self.m * kv;
        let offsets = self.graph.row_offsets();
        let cols = self.graph.col_indices();
        let weights = self.graph.weights();
        for i in 0..n {
            let mut wv = 0.0;
            for p in offsets[i]..offsets[i + 1] {
                wv += weights[p] * v[cols[p]];
            }
            out[i] = k[i] * v[i] - wv + scale * k[i];
        }
        Ok(())
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; v.len()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    /// `2(1+γ) k_max`, an upper bound on `‖M‖∞` (and hence on the spectral
    /// radius).
    pub fn m_inf_norm_bound(&self) -> f64 {
        2.0 * (1.0 + self.gamma) * self.graph.max_degree()
    }
}

/// Free-function form of [`OperatorM::m_inf_norm_bound`].
pub fn m_inf_norm_bound(op: &OperatorM<'_>) -> f64 {
    op.m_inf_norm_bound()
}

/// The `n_eig` smallest eigenpairs of `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    /// Ascending, nonnegative.
    pub eigenvalues: Vec<f64>,
    /// `N × n_eig`, orthonormal columns.
    pub eigenvectors: DMatrix<f64>,
    /// Smallest eigenvalue of `M`.
    pub lambda_1: f64,
    /// Upper bound on `‖M‖∞`.
    pub m_inf_bound: f64,
    /// `γ` of the operator the basis belongs to.
    pub gamma: f64,
    /// `‖M v_i - λ_i v_i‖₂` per pair, measured after convergence.
    pub residuals: Vec<f64>,
}

impl EigenBasis {
    pub fn n_eig(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// Keeps only the first `n` pairs.
    pub fn truncated(&self, n: usize) -> EigenBasis {
        let n = n.min(self.n_eig());
        EigenBasis {
            eigenvalues: self.eigenvalues[..n].to_vec(),
            eigenvectors: self.eigenvectors.columns(0, n).into_owned(),
            lambda_1: self.lambda_1,
            m_inf_bound: self.m_inf_bound,
            gamma: self.gamma,
            residuals: self.residuals[..n].to_vec(),
        }
    }

    /// `max |VᵀV - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let v = &self.eigenvectors;
        let gram = v.tr_mul(v);
        let mut worst: f64 = 0.0;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// Knobs for [`smallest_eigenpairs`].
#[derive(Debug, Clone, PartialEq)]
pub struct EigenOptions {
    /// Convergence threshold on `‖M y - θ y‖ / max(1, |θ|)`.
    pub tol: f64,
    /// Restart-cycle cap; `None` means `50 · n_eig`.
    pub max_restarts: Option<usize>,
    /// Seed for the starting block.
    pub seed: u64,
    /// Krylov block width; `None` picks `min(n_eig, 16)`.
    pub block_size: Option<usize>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            max_restarts: None,
            seed: 0,
            block_size: None,
        }
    }
}

/// Clamps a requested basis size to the graph size, warning when it had to.
pub fn clamp_n_eig(requested: usize, n_nodes: usize) -> usize {
    if requested > n_nodes {
        log::warn!("requested {requested} eigenpairs but the graph has {n_nodes} nodes; using {n_nodes}");
        n_nodes
    } else {
        requested.max(1)
    }
}

struct KrylovBasis<'a, 'g> {
    op: &'a OperatorM<'g>,
    v: DMatrix<f64>,
    mv: DMatrix<f64>,
    h: DMatrix<f64>,
    len: usize,
    scratch: Vec<f64>,
}

impl<'a, 'g> KrylovBasis<'a, 'g> {
    fn new(op: &'a OperatorM<'g>, capacity: usize) -> Self {
        let n = op.dim();
        KrylovBasis {
            op,
            v: DMatrix::zeros(n, capacity),
            mv: DMatrix::zeros(n, capacity),
            h: DMatrix::zeros(capacity, capacity),
            len: 0,
            scratch: vec![0.0; n],
        }
    }

    fn capacity(&self) -> usize {
        self.v.ncols()
    }

    /// Two passes of classical Gram-Schmidt against the current basis.
    fn orthogonalize(&self, w: &mut DVector<f64>) {
        if self.len == 0 {
            return;
        }
        let basis = self.v.columns(0, self.len);
        for _ in 0..2 {
            let coeffs = basis.tr_mul(w);
            *w -= basis * coeffs;
        }
    }

    /// Appends `candidate` after orthogonalization; substitutes random
    /// directions when the candidate is numerically already in the span.
    /// Returns `false` once the basis cannot grow any further.
    fn push(&mut self, candidate: DVector<f64>, rng: &mut ChaCha8Rng) -> Result<bool> {
        let n = self.op.dim();
        if self.len >= self.capacity() || self.len >= n {
            return Ok(false);
        }
        let mut w = candidate;
        let mut accepted = false;
        for attempt in 0..4 {
            if attempt > 0 {
                w = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
            }
            let before = w.norm();
            if !(before > 0.0) || !before.is_finite() {
                continue;
            }
            self.orthogonalize(&mut w);
            let after = w.norm();
            if after > 1e-8 * before {
                w /= after;
                self.orthogonalize(&mut w);
                let renorm = w.norm();
                w /= renorm;
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Ok(false);
        }
        let j = self.len;
        self.v.set_column(j, &w);
        self.op.apply_into(w.as_slice(), &mut self.scratch)?;
        let mw = DVector::from_column_slice(&self.scratch);
        let proj = self.v.columns(0, j + 1).tr_mul(&mw);
        for i in 0..=j {
            self.h[(i, j)] = proj[i];
            self.h[(j, i)] = proj[i];
        }
        self.mv.set_column(j, &mw);
        self.len += 1;
        Ok(true)
    }

    /// Ascending Ritz values and the matching coefficient vectors.
    fn ritz(&self) -> (Vec<f64>, DMatrix<f64>) {
        let h = self.h.view((0, 0), (self.len, self.len)).into_owned();
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..self.len).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.len, self.len, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    fn residual(&self, theta: f64, s: &DVector<f64>) -> DVector<f64> {
        let mvs = self.mv.columns(0, self.len) * s;
        let vs = self.v.columns(0, self.len) * s;
        mvs - vs * theta
    }

    /// Compresses the basis onto the given Ritz coefficient columns.
    fn compress(&mut self, values: &[f64], coeffs: &DMatrix<f64>) {
        let keep = coeffs.ncols();
        let new_v = self.v.columns(0, self.len) * coeffs;
        let new_mv = self.mv.columns(0, self.len) * coeffs;
        self.v.columns_mut(0, keep).copy_from(&new_v);
        self.mv.columns_mut(0, keep).copy_from(&new_mv);
        self.h.fill(0.0);
        for i in 0..keep {
            self.h[(i, i)] = values[i];
        }
        self.len = keep;
    }
}

/// Computes the `n_eig` smallest eigenpairs of `M`.
///
/// The block width bounds how many copies of a repeated eigenvalue the
/// Krylov space can resolve; the default width `min(n_eig, 16)` covers
/// every multiplicity inside the wanted set up to 16.
pub fn smallest_eigenpairs(op: &OperatorM<'_>, n_eig: usize, opts: &EigenOptions) -> Result<EigenBasis> {
    let n = op.dim();
    if n_eig == 0 || n_eig > n {
        return Err(Error::param("n_eig", format!("must be in 1..={n}, got {n_eig}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let block = opts.block_size.unwrap_or(n_eig.min(16)).clamp(1, n);
    let keep_target = n_eig + block;
    let capacity = n.min((keep_target + 3 * block).max(32));
    // Restarts only happen when capacity < n, where capacity >= keep + 3·block.
    let keep = keep_target.min(capacity);
    let max_restarts = opts.max_restarts.unwrap_or(50 * n_eig);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = KrylovBasis::new(op, capacity);
    for _ in 0..block {
        let start = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        basis.push(start, &mut rng)?;
    }

    let relative = |theta: f64, res: f64| res / theta.abs().max(1.0);
    let mut restarts = 0;
    loop {
        let (values, coeffs) = basis.ritz();
        let window = keep_target.min(basis.len);
        let mut residuals = Vec::with_capacity(window);
        let mut rel = Vec::with_capacity(window);
        for c in 0..window {
            let s = coeffs.column(c).into_owned();
            let r = basis.residual(values[c], &s);
            rel.push(relative(values[c], r.norm()));
            residuals.push(r);
        }
        let done = basis.len >= n_eig && rel[..n_eig].iter().all(|&r| r <= opts.tol);
        if done || basis.len == n {
            if !done {
                let worst = rel[..n_eig].iter().copied().fold(0.0, f64::max);
                // The full space is spanned, so Ritz pairs are exact up to
                // rounding; only a grossly inaccurate result is an error.
                if worst > opts.tol.max(1e-10) * 1e3 {
                    return Err(Error::NoConvergence {
                        iterations: restarts,
                        worst_residual: worst,
                        residuals: rel[..n_eig].to_vec(),
                    });
                }
            }
            let next_value = values.get(n_eig).copied();
            return finish(op, &basis, &values, &coeffs, n_eig, next_value);
        }

        if basis.len + 1 > capacity {
            if restarts >= max_restarts {
                return Err(Error::NoConvergence {
                    iterations: restarts,
                    worst_residual: rel[..n_eig].iter().copied().fold(0.0, f64::max),
                    residuals: rel[..n_eig].to_vec(),
                });
            }
            restarts += 1;
            let kept = keep.min(basis.len);
            basis.compress(&values[..kept], &coeffs.columns(0, kept).into_owned());
        }

        // Residuals of Ritz pairs are orthogonal to the basis, so they extend
        // it exactly as a block Krylov step would.
        let room = (capacity - basis.len).min(block);
        let mut added = 0;
        for c in 0..window {
            if added == room {
                break;
            }
            if c < n_eig && rel[c] <= opts.tol {
                continue;
            }
            if basis.push(residuals[c].clone(), &mut rng)? {
                added += 1;
            }
        }
        if added == 0 {
            let probe = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            basis.push(probe, &mut rng)?;
        }
    }
}

fn finish(
    op: &OperatorM<'_>,
    basis: &KrylovBasis<'_, '_>,
    values: &[f64],
    coeffs: &DMatrix<f64>,
    n_eig: usize,
    next_value: Option<f64>,
) -> Result<EigenBasis> {
    let n = op.dim();
    let mut vectors = basis.v.columns(0, basis.len) * coeffs.columns(0, n_eig);
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    let eigenvalues: Vec<f64> = values[..n_eig].iter().map(|&x| x.max(0.0)).collect();
    let mut residuals = Vec::with_capacity(n_eig);
    let mut mv = vec![0.0; n];
    for c in 0..n_eig {
        let col = vectors.column(c);
        op.apply_into(col.as_slice(), &mut mv)?;
        let res: f64 = mv
            .iter()
            .zip(col.iter())
            .map(|(a, b)| (a - eigenvalues[c] * b).powi(2))
            .sum::<f64>()
            .sqrt();
        residuals.push(res);
    }
    if let Some(next) = next_value {
        let last = eigenvalues[n_eig - 1];
        if (next - last).abs() <= 1e-6 * last.abs().max(1.0) {
            log::warn!(
                "eigenvalue {n_eig} ({last:.6e}) is clustered with the next one ({next:.6e}); \
                 the truncated basis splits a near-degenerate eigenspace"
            );
        }
    }
    Ok(EigenBasis {
        lambda_1: eigenvalues[0],
        eigenvalues,
        eigenvectors: vectors,
        m_inf_bound: op.m_inf_norm_bound(),
        gamma: op.gamma(),
        residuals,
    })
}
