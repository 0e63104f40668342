//! Immutable weighted undirected graph in compressed sparse row form.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Symmetric, nonnegatively weighted graph without self-loops.
///
/// Both orientations of every undirected edge are stored, so row `i` lists
/// every neighbor of `i`. Degrees `k_i = sum_j w_ij` and the total weight
/// `2m = sum_i k_i` are computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    n_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    total_weight: f64,
}

impl SparseGraph {
    /// Builds a graph from undirected edges `(i, j, w)`.
    ///
    /// Each edge may be listed in one or both orientations. Self-loops and
    /// zero weights are dropped. Listing the same pair twice with different
    /// weights is rejected, since multigraphs are not supported.
    pub fn from_edges<I>(n_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, w) in edges {
            for idx in [i, j] {
                if idx >= n_nodes {
                    return Err(Error::NodeOutOfRange { index: idx, n_nodes });
                }
            }
            if !w.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "non-finite weight on edge ({i}, {j})"
                )));
            }
            if w < 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "negative weight {w} on edge ({i}, {j})"
                )));
            }
            if i == j || w == 0.0 {
                continue;
            }
            let key = (i.min(j), i.max(j));
            match merged.get(&key) {
                Some(&prev) if prev != w => {
                    return Err(Error::InvalidGraph(format!(
                        "edge ({}, {}) listed twice with weights {prev} and {w}",
                        key.0, key.1
                    )));
                }
                _ => {
                    merged.insert(key, w);
                }
            }
        }
        Ok(Self::from_unique_pairs(n_nodes, &merged))
    }

    /// Builds a graph from already-deduplicated pairs keyed by `(min, max)`.
    pub(crate) fn from_unique_pairs(n_nodes: usize, pairs: &BTreeMap<(usize, usize), f64>) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = pairs
            .iter()
            .flat_map(|(&(i, j), &w)| [(i, j, w), (j, i, w)])
            .collect();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_offsets = vec![0usize; n_nodes + 1];
        for &(r, _, _) in &entries {
            row_offsets[r + 1] += 1;
        }
        for i in 0..n_nodes {
            row_offsets[i + 1] += row_offsets[i];
        }
        let col_indices = entries.iter().map(|e| e.1).collect();
        let weights = entries.iter().map(|e| e.2).collect();
        Self::assemble(n_nodes, row_offsets, col_indices, weights)
    }

    /// Builds a graph from raw CSR arrays, validating every invariant.
    pub fn from_csr(
        n_nodes: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_nodes + 1 || row_offsets[0] != 0 {
            return Err(Error::InvalidGraph("malformed row offsets".into()));
        }
        if col_indices.len() != weights.len() || *row_offsets.last().unwrap() != weights.len() {
            return Err(Error::InvalidGraph("row offsets do not match entries".into()));
        }
        if row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidGraph("row offsets must be nondecreasing".into()));
        }
        let graph = Self::assemble(n_nodes, row_offsets, col_indices, weights);
        graph.validate()?;
        Ok(graph)
    }

    fn assemble(
        n_nodes: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        weights: Vec<f64>,
    ) -> Self {
        let degrees: Vec<f64> = (0..n_nodes)
            .map(|i| weights[row_offsets[i]..row_offsets[i + 1]].iter().sum())
            .collect();
        let total_weight = degrees.iter().sum();
        SparseGraph {
            n_nodes,
            row_offsets,
            col_indices,
            weights,
            degrees,
            total_weight,
        }
    }

    /// Checks symmetry, nonnegativity, absence of self-loops and degree
    /// consistency.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.n_nodes {
            let mut prev: Option<usize> = None;
            for (j, w) in self.neighbors(i) {
                if j >= self.n_nodes {
                    return Err(Error::NodeOutOfRange {
                        index: j,
                        n_nodes: self.n_nodes,
                    });
                }
                if prev.is_some_and(|p| p >= j) {
                    return Err(Error::InvalidGraph(format!(
                        "row {i} has unsorted or duplicate columns"
                    )));
                }
                prev = Some(j);
                if i == j {
                    return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
                }
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(Error::InvalidGraph(format!(
                        "invalid weight {w} on ({i}, {j})"
                    )));
                }
                if self.weight(j, i) != Some(w) {
                    return Err(Error::InvalidGraph(format!(
                        "asymmetric entry ({i}, {j})"
                    )));
                }
            }
        }
        let mut sum = 0.0;
        for i in 0..self.n_nodes {
            let row: f64 = self.neighbors(i).map(|(_, w)| w).sum();
            if (row - self.degrees[i]).abs() > 1e-12 * row.abs().max(1.0) {
                return Err(Error::InvalidGraph(format!("degree mismatch at node {i}")));
            }
            sum += self.degrees[i];
        }
        if (sum - self.total_weight).abs() > 1e-12 * sum.abs().max(1.0) {
            return Err(Error::InvalidGraph("total weight mismatch".into()));
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.col_indices.len() / 2
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    /// `2m`, the sum of all degrees.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn max_degree(&self) -> f64 {
        self.degrees.iter().copied().fold(0.0, f64::max)
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Weight of the stored entry `(i, j)`, if any.
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        let cols = &self.col_indices[range.clone()];
        cols.binary_search(&j).ok().map(|p| self.weights[range.start + p])
    }

    /// Undirected edges with `i < j`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_nodes).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| i < j)
                .map(move |(j, w)| (i, j, w))
        })
    }

    /// Subgraph induced by `nodes`; node `p` of the result is `nodes[p]`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<SparseGraph> {
        let mut local = vec![usize::MAX; self.n_nodes];
        for (p, &v) in nodes.iter().enumerate() {
            if v >= self.n_nodes {
                return Err(Error::NodeOutOfRange {
                    index: v,
                    n_nodes: self.n_nodes,
                });
            }
            local[v] = p;
        }
        let mut row_offsets = Vec::with_capacity(nodes.len() + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut weights = Vec::new();
        for &v in nodes {
            let mut row: Vec<(usize, f64)> = self
                .neighbors(v)
                .filter(|&(j, _)| local[j] != usize::MAX)
                .map(|(j, w)| (local[j], w))
                .collect();
            row.sort_unstable_by_key(|&(c, _)| c);
            for (c, w) in row {
                col_indices.push(c);
                weights.push(w);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self::assemble(nodes.len(), row_offsets, col_indices, weights))
    }

    /// Relabels nodes so that old node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<SparseGraph> {
        if perm.len() != self.n_nodes {
            return Err(Error::DimensionMismatch {
                expected: format!("permutation of length {}", self.n_nodes),
                actual: format!("length {}", perm.len()),
            });
        }
        SparseGraph::from_edges(
            self.n_nodes,
            self.edges().map(|(i, j, w)| (perm[i], perm[j], w)),
        )
    }

    /// Stable content hash of the CSR arrays, used as an eigenbasis cache key.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n_nodes as u64).to_le_bytes());
        for &o in &self.row_offsets {
            hasher.update((o as u64).to_le_bytes());
        }
        for &c in &self.col_indices {
            hasher.update((c as u64).to_le_bytes());
        }
        for &w in &self.weights {
            hasher.update(w.to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..12].iter().map(|b| format!("{b:02x}")).collect()
    }
}
