//! Building graphs from point clouds, images and random models.

mod generators;
mod kdtree;
mod knn;
mod nonlocal;

pub use generators::{planted_partition, two_moons, GroundTruth, TWO_MOONS_NOISE};
pub use kdtree::KdTree;
pub use knn::{knn_graph, knn_graph_with, nearest_neighbors, KnnSearch, BRUTE_FORCE_LIMIT};
pub use nonlocal::{nonlocal_means_features, HyperCube};

use crate::error::{Error, Result};

/// Dense row-major point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_points: usize,
    dim: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n_points: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if n_points == 0 || dim == 0 {
            return Err(Error::param("features", "need at least one point and one dimension"));
        }
        if values.len() != n_points * dim {
            return Err(Error::DimensionMismatch {
                expected: format!("{n_points} × {dim} values"),
                actual: format!("{} values", values.len()),
            });
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        Ok(FeatureMatrix {
            n_points,
            dim,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: format!("rows of length {dim}"),
                actual: format!("row of length {}", bad.len()),
            });
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Rows reordered so that old row `i` becomes row `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_points {
            return Err(Error::param("perm", "length must equal the number of points"));
        }
        let mut values = vec![0.0; self.values.len()];
        let mut seen = vec![false; self.n_points];
        for (i, &p) in perm.iter().enumerate() {
            if p >= self.n_points || std::mem::replace(&mut seen[p], true) {
                return Err(Error::param("perm", "not a permutation"));
            }
            values[p * self.dim..(p + 1) * self.dim].copy_from_slice(self.row(i));
        }
        Self::new(self.n_points, self.dim, values)
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
