//! Dense reference computations for tests and diagnostics.
//!
//! These materialize `M` as an `N × N` matrix and are limited to small
//! graphs. Nothing in the solver path depends on them.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::eigen::OperatorM;
use crate::error::{Error, Result};

/// Largest graph the dense routines accept.
pub const DENSE_LIMIT: usize = 2000;

/// Full spectrum of a dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns match `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

fn check_size(n: usize) -> Result<()> {
    if n > DENSE_LIMIT {
        return Err(Error::param(
            "graph",
            format!("{n} nodes exceeds the dense oracle limit of {DENSE_LIMIT}"),
        ));
    }
    Ok(())
}

/// `diag(k) - W + (γ/m) k kᵀ` built entry by entry from the graph.
pub fn dense_m(op: &OperatorM<'_>) -> Result<DMatrix<f64>> {
    let g = op.graph();
    let n = g.n_nodes();
    check_size(n)?;
    let m = g.total_weight() / 2.0;
    let k = g.degrees();
    let mut dense = DMatrix::from_fn(n, n, |i, j| op.gamma() / m * k[i] * k[j]);
    for i in 0..n {
        dense[(i, i)] += k[i];
        for (j, w) in g.neighbors(i) {
            dense[(i, j)] -= w;
        }
    }
    Ok(dense)
}

/// Dense graph Laplacian `diag(k) - W`.
pub fn dense_laplacian(op: &OperatorM<'_>) -> Result<DMatrix<f64>> {
    let g = op.graph();
    let n = g.n_nodes();
    check_size(n)?;
    let mut lap = DMatrix::zeros(n, n);
    for i in 0..n {
        lap[(i, i)] = g.degree(i);
        for (j, w) in g.neighbors(i) {
            lap[(i, j)] -= w;
        }
    }
    Ok(lap)
}

pub fn symmetric_spectrum(a: DMatrix<f64>) -> DenseSpectrum {
    let n = a.nrows();
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    DenseSpectrum {
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        eigenvectors: DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]),
    }
}

/// Full symmetric eigendecomposition of the dense `M`.
pub fn dense_eigen_oracle(op: &OperatorM<'_>) -> Result<DenseSpectrum> {
    Ok(symmetric_spectrum(dense_m(op)?))
}

/// `‖A‖∞ = max_i Σ_j |a_ij|`.
pub fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
