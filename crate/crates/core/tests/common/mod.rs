//! Shared helpers for integration tests: random instances and a dense
//! matrix-exponential oracle independent of the eigensolver.

#![allow(dead_code)]

use balanced_tv::eigen::OperatorM;
use balanced_tv::graph::SparseGraph;
use balanced_tv::oracle::dense_m;
use balanced_tv::partition::{Labels, PartitionMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi-style graph with weights in `[0.1, 2]`. With `connected`,
/// a random spanning tree is added first.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, connected: bool) -> SparseGraph {
    let mut edges = std::collections::BTreeMap::new();
    if connected {
        for i in 1..n {
            let j = rng.random_range(0..i);
            edges.insert((j, i), rng.random_range(0.1..2.0));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.entry((i, j)).or_insert_with(|| rng.random_range(0.1..2.0));
            }
        }
    }
    if edges.is_empty() && n >= 2 {
        edges.insert((0, 1), 1.0);
    }
    SparseGraph::from_edges(n, edges.into_iter().map(|((i, j), w)| (i, j, w))).unwrap()
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, nhat: usize) -> Labels {
    Labels::new((0..n).map(|_| rng.random_range(0..nhat)).collect())
}

pub fn random_partition(rng: &mut ChaCha8Rng, n: usize, nhat: usize) -> PartitionMatrix {
    PartitionMatrix::from_labels(&random_labels(rng, n, nhat), nhat).unwrap()
}

/// `e^{-τM}` via nalgebra's Padé scaling-and-squaring exponential.
pub fn dense_heat(op: &OperatorM<'_>, tau: f64) -> DMatrix<f64> {
    (dense_m(op).unwrap() * -tau).exp()
}

/// `max_i Σ_j |a_ij|`.
pub fn row_sum_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Every partition of `0..n` into at most `max_parts` blocks, as
/// restricted-growth label vectors.
pub fn all_partitions(n: usize, max_parts: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, n: usize, max_parts: usize, used: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for l in 0..(used + 1).min(max_parts) {
            prefix.push(l);
            rec(prefix, n, max_parts, used.max(l + 1), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), n, max_parts, 0, &mut out);
    out
}
