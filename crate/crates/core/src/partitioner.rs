//! Strategies for choosing the number of communities.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::eigen::{clamp_n_eig, EigenBasis, EigenCache, EigenOptions};
use crate::energy::modularity;
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::mbo::{mbo_run, MboConfig, MboResult};
use crate::partition::{Labels, PartitionMatrix, Supervision};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursiveParams {
    pub split_factor: usize,
    pub min_size: usize,
    pub gain_tol: f64,
}

impl Default for RecursiveParams {
    fn default() -> Self {
        RecursiveParams {
            split_factor: 2,
            min_size: 4,
            gain_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartitionStrategy {
    Fixed(usize),
    Sweep(usize, usize),
    Recursive(RecursiveParams),
}

impl PartitionStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PartitionStrategy::Fixed(0) => Err(Error::param("nhat", "must be at least 1")),
            PartitionStrategy::Sweep(lo, hi) if lo == 0 || lo > hi => Err(Error::param(
                "sweep",
                format!("range {lo}..{hi} must be nonempty and start at 1 or more"),
            )),
            PartitionStrategy::Recursive(p) => {
                if p.split_factor < 2 {
                    Err(Error::param("split_factor", "must be at least 2"))
                } else if !(p.gain_tol >= 0.0) {
                    Err(Error::param("gain_tol", "must be nonnegative"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

const KMEANS_RESTARTS: usize = 8;
const KMEANS_ITERS: usize = 100;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_pp_seed(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, centers.last().unwrap()));
        }
    }
    centers
}

/// Lloyd iterations from k-means++ seeds. Returns `(assignment, inertia)`.
fn lloyd(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let dim = points[0].len();
    let mut centers = kmeans_pp_seed(points, k, rng);
    let mut assign = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_ITERS {
        let mut changed = false;
        for (a, p) in assign.iter_mut().zip(points) {
            let best = (0..k)
                .min_by(|&x, &y| sq_dist(p, &centers[x]).total_cmp(&sq_dist(p, &centers[y])))
                .unwrap();
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assign.iter().zip(points) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = assign.iter().zip(points).map(|(&a, p)| sq_dist(p, &centers[a])).sum();
    (assign, inertia)
}

/// k-means with `k = n̂` on the rows of the `n̂` leading eigenvectors.
///
/// Keeps the lowest-inertia run over several k-means++ restarts. Clusters
/// that end up empty receive randomly chosen nodes from clusters with more
/// than one member.
pub fn kmeans_init(basis: &EigenBasis, nhat: usize, seed: u64) -> Result<PartitionMatrix> {
    let n = basis.n_nodes();
    if nhat == 0 {
        return Err(Error::param("nhat", "must be at least 1"));
    }
    if basis.n_eig() < nhat {
        return Err(Error::param(
            "basis",
            format!("has {} vectors but n̂ = {nhat}", basis.n_eig()),
        ));
    }
    if nhat > n {
        return Err(Error::param("nhat", format!("{nhat} exceeds {n} nodes")));
    }
    if nhat == 1 {
        return PartitionMatrix::from_labels(&Labels::new(vec![0; n]), 1);
    }
    let v = &basis.eigenvectors;
    let points: Vec<Vec<f64>> = (0..n).map(|i| (0..nhat).map(|c| v[(i, c)]).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let run = lloyd(&points, nhat, &mut rng);
        if best.as_ref().is_none_or(|b| run.1 < b.1) {
            best = Some(run);
        }
    }
    let mut assign = best.unwrap().0;
    let mut counts = vec![0usize; nhat];
    for &a in &assign {
        counts[a] += 1;
    }
    for c in 0..nhat {
        if counts[c] == 0 {
            log::debug!("k-means cluster {c} is empty; filling it with a random node");
            loop {
                let i = rng.random_range(0..n);
                if counts[assign[i]] > 1 {
                    counts[assign[i]] -= 1;
                    assign[i] = c;
                    counts[c] = 1;
                    break;
                }
            }
        }
    }
    PartitionMatrix::from_labels(&Labels::new(assign), nhat)
}

/// Best run of a sweep plus the modularity reached at every `n̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub best: MboResult,
    pub best_nhat: usize,
    pub per_nhat: Vec<(usize, f64)>,
}

/// Runs MBO for every `n̂` in `range` on one shared basis of size
/// `5 · max(range)` and keeps the highest modularity; ties go to the
/// smaller `n̂`. `config.nhat` and `config.n_eig` are overridden.
pub fn sweep_nhat(
    graph: &SparseGraph,
    range: RangeInclusive<usize>,
    config: &MboConfig,
    cache: &EigenCache,
) -> Result<SweepResult> {
    let (lo, hi) = (*range.start(), *range.end());
    PartitionStrategy::Sweep(lo, hi).validate()?;
    let n_eig = clamp_n_eig(5 * hi, graph.n_nodes());
    let opts = EigenOptions {
        seed: config.seed,
        ..EigenOptions::default()
    };
    let basis = cache.get_or_compute(graph, config.gamma, n_eig, &opts)?;
    let mut best: Option<(usize, MboResult)> = None;
    let mut per_nhat = Vec::with_capacity(hi - lo + 1);
    for nhat in range {
        if nhat > graph.n_nodes() {
            break;
        }
        let mut cfg = config.clone().with_nhat(nhat);
        cfg.n_eig = Some(n_eig);
        let r = mbo_run(graph, &basis, &cfg, None, None)?;
        per_nhat.push((nhat, r.modularity));
        if best.as_ref().is_none_or(|(_, b)| r.modularity > b.modularity) {
            best = Some((nhat, r));
        }
    }
    let (best_nhat, best) = best.ok_or_else(|| Error::param("sweep", "no n̂ fits the graph"))?;
    Ok(SweepResult {
        best,
        best_nhat,
        per_nhat,
    })
}

/// Runs a single fixed-`n̂` solve, computing (or reusing) the basis.
pub fn fixed_partition(
    graph: &SparseGraph,
    config: &MboConfig,
    sup: Option<&Supervision>,
    cache: &EigenCache,
) -> Result<MboResult> {
    let n_eig = clamp_n_eig(config.n_eig(), graph.n_nodes());
    let opts = EigenOptions {
        seed: config.seed,
        ..EigenOptions::default()
    };
    let basis = cache.get_or_compute(graph, config.gamma, n_eig, &opts)?;
    mbo_run(graph, &basis, config, sup, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveResult {
    pub labels: Labels,
    pub modularity: f64,
    /// Full-graph modularity after each accepted split, starting from the
    /// single community.
    pub history: Vec<f64>,
    /// Parts produced by each accepted split, in acceptance order;
    /// `history[i + 1]` is the modularity right after `splits[i]`.
    pub splits: Vec<Vec<Vec<usize>>>,
}

/// `(1/2m)(Σ_{i,j∈A} w_ij - γ vol(A)²/2m)` using the full graph's degrees.
fn contribution(graph: &SparseGraph, sub: &SparseGraph, nodes: &[usize], gamma: f64) -> f64 {
    let two_m = graph.total_weight();
    let vol: f64 = nodes.iter().map(|&v| graph.degree(v)).sum();
    (sub.total_weight() - gamma * vol * vol / two_m) / two_m
}

fn split_seed(seed: u64, first_node: usize) -> u64 {
    seed ^ (first_node as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Proposed split of one community: parts (global ids) and the change in
/// full-graph modularity.
fn propose_split(
    graph: &SparseGraph,
    nodes: &[usize],
    config: &MboConfig,
    params: &RecursiveParams,
) -> Result<Option<(Vec<Vec<usize>>, f64)>> {
    let sub = graph.induced_subgraph(nodes)?;
    if sub.total_weight() <= 0.0 {
        return Ok(None);
    }
    let nhat = params.split_factor.min(nodes.len());
    let n_eig = (5 * nhat).min(nodes.len());
    let seed = split_seed(config.seed, nodes[0]);
    let opts = EigenOptions {
        seed,
        ..EigenOptions::default()
    };
    let op = crate::eigen::OperatorM::new(&sub, config.gamma)?;
    let basis = crate::eigen::smallest_eigenpairs(&op, n_eig, &opts)?;
    let mut cfg = config.clone().with_nhat(nhat).with_seed(seed);
    cfg.n_eig = Some(n_eig);
    let r = mbo_run(&sub, &basis, &cfg, None, None)?;
    let parts: Vec<Vec<usize>> = r
        .labels
        .members()
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|m| m.into_iter().map(|p| nodes[p]).collect())
        .collect();
    if parts.len() < 2 {
        return Ok(None);
    }
    let before = contribution(graph, &sub, nodes, config.gamma);
    let mut after = 0.0;
    for part in &parts {
        let psub = graph.induced_subgraph(part)?;
        after += contribution(graph, &psub, part, config.gamma);
    }
    Ok(Some((parts, after - before)))
}

/// Splits communities top-down, accepting a split only when it raises the
/// full-graph modularity by more than `gain_tol`.
///
/// Every level of the recursion tree is solved in parallel. Acceptance
/// only depends on the community being split, so the result does not
/// depend on scheduling.
pub fn recursive_partition(
    graph: &SparseGraph,
    config: &MboConfig,
    params: &RecursiveParams,
) -> Result<RecursiveResult> {
    PartitionStrategy::Recursive(*params).validate()?;
    let n = graph.n_nodes();
    if n == 0 || graph.total_weight() <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let everything: Vec<usize> = (0..n).collect();
    let mut q = contribution(graph, graph, &everything, config.gamma);
    let mut history = vec![q];
    let mut splits = Vec::new();
    let mut done: Vec<Vec<usize>> = Vec::new();
    let mut frontier = vec![everything];
    while !frontier.is_empty() {
        let (small, big): (Vec<_>, Vec<_>) = frontier.into_iter().partition(|c| c.len() < params.min_size);
        done.extend(small);
        let proposals: Vec<_> = big
            .par_iter()
            .map(|nodes| propose_split(graph, nodes, config, params))
            .collect::<Result<_>>()?;
        frontier = Vec::new();
        for (nodes, proposal) in big.into_iter().zip(proposals) {
            match proposal {
                Some((parts, gain)) if gain > params.gain_tol => {
                    q += gain;
                    history.push(q);
                    splits.push(parts.clone());
                    frontier.extend(parts);
                }
                _ => done.push(nodes),
            }
        }
    }
    let mut labels = vec![0; n];
    done.sort_by_key(|c| c[0]);
    for (c, nodes) in done.iter().enumerate() {
        for &v in nodes {
            labels[v] = c;
        }
    }
    let labels = Labels::new(labels).relabeled_contiguous();
    let modularity = modularity(graph, &labels, config.gamma)?;
    Ok(RecursiveResult {
        labels,
        modularity,
        history,
        splits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{smallest_eigenpairs, OperatorM};
    use approx::assert_abs_diff_eq;

    fn cliques(sizes: &[usize], bridge: Option<f64>) -> SparseGraph {
        let mut edges = Vec::new();
        let mut offset = 0;
        for (b, &s) in sizes.iter().enumerate() {
            for i in 0..s {
                for j in i + 1..s {
                    edges.push((offset + i, offset + j, 1.0));
                }
            }
            if let (Some(w), true) = (bridge, b > 0) {
                edges.push((offset - 1, offset, w));
            }
            offset += s;
        }
        SparseGraph::from_edges(offset, edges).unwrap()
    }

    fn same_block(labels: &[usize], blocks: &[std::ops::Range<usize>]) -> bool {
        blocks.iter().all(|r| labels[r.clone()].iter().all(|&x| x == labels[r.start]))
            && blocks
                .iter()
                .enumerate()
                .all(|(a, ra)| blocks[a + 1..].iter().all(|rb| labels[ra.start] != labels[rb.start]))
    }

    #[test]
    fn strategy_validation() {
        assert!(PartitionStrategy::Fixed(0).validate().is_err());
        assert!(PartitionStrategy::Sweep(3, 2).validate().is_err());
        assert!(PartitionStrategy::Sweep(2, 2).validate().is_ok());
        let bad = RecursiveParams {
            split_factor: 1,
            ..RecursiveParams::default()
        };
        assert!(PartitionStrategy::Recursive(bad).validate().is_err());
        let neg = RecursiveParams {
            gain_tol: -1.0,
            ..RecursiveParams::default()
        };
        assert!(PartitionStrategy::Recursive(neg).validate().is_err());
    }

    #[test]
    fn kmeans_separates_cliques() {
        // With γ = 0.2 the two leading eigenvectors of two disjoint 6-cliques
        // are both blockwise constant.
        let g = cliques(&[6, 6], None);
        let op = OperatorM::new(&g, 0.2).unwrap();
        let basis = smallest_eigenpairs(&op, 4, &EigenOptions::default()).unwrap();
        for seed in 0..5 {
            let p = kmeans_init(&basis, 2, seed).unwrap();
            assert!(same_block(p.to_labels().as_slice(), &[0..6, 6..12]));
        }
        let a = kmeans_init(&basis, 2, 3).unwrap();
        assert_eq!(a, kmeans_init(&basis, 2, 3).unwrap());
        let one = kmeans_init(&basis, 1, 0).unwrap();
        assert!(one.to_labels().as_slice().iter().all(|&x| x == 0));
        assert!(kmeans_init(&basis, 5, 0).is_err());
    }

    #[test]
    fn kmeans_fills_empty_clusters() {
        // Two distinct rows cannot support three nonempty clusters without
        // the random fallback.
        let g = cliques(&[3, 3], None);
        let op = OperatorM::new(&g, 0.2).unwrap();
        let mut basis = smallest_eigenpairs(&op, 3, &EigenOptions::default()).unwrap();
        for i in 0..6 {
            for c in 0..3 {
                basis.eigenvectors[(i, c)] = if i < 3 { 0.0 } else { 1.0 };
            }
        }
        let p = kmeans_init(&basis, 3, 1).unwrap();
        assert_eq!(p.to_labels().n_communities(), 3);
    }

    #[test]
    fn sweep_picks_two_cliques() {
        let g = cliques(&[5, 5], None);
        let cache = EigenCache::in_memory();
        let config = MboConfig::new(1.0, 2).with_seed(1);
        let r = sweep_nhat(&g, 2..=4, &config, &cache).unwrap();
        assert_eq!(cache.computations(), 1);
        assert_eq!(r.best.labels.n_communities(), 2);
        assert_abs_diff_eq!(r.best.modularity, 0.5, epsilon = 1e-12);
        for &(_, q) in &r.per_nhat {
            assert!(r.best.modularity >= q);
        }
    }

    #[test]
    fn single_value_sweep_matches_fixed() {
        let g = cliques(&[4, 5, 6], Some(0.5));
        let cache = EigenCache::in_memory();
        let config = MboConfig::new(1.0, 3).with_seed(4);
        let s = sweep_nhat(&g, 3..=3, &config, &cache).unwrap();
        let f = fixed_partition(&g, &MboConfig { n_eig: Some(15), ..config }, None, &cache).unwrap();
        assert_eq!(s.best, f);
        assert_eq!(cache.computations(), 1);
    }

    #[test]
    fn recursive_recovers_four_cliques() {
        let g = cliques(&[8, 8, 8, 8], Some(1.0));
        let config = MboConfig::new(1.0, 2).with_seed(2);
        let r = recursive_partition(&g, &config, &RecursiveParams::default()).unwrap();
        assert!(same_block(r.labels.as_slice(), &[0..8, 8..16, 16..24, 24..32]));
        assert_abs_diff_eq!(r.modularity, *r.history.last().unwrap(), epsilon = 1e-10);
        assert!(r.history.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn recursive_keeps_triangle_whole() {
        let g = cliques(&[3], None);
        let config = MboConfig::new(1.0, 2);
        let params = RecursiveParams {
            min_size: 2,
            ..RecursiveParams::default()
        };
        let r = recursive_partition(&g, &config, &params).unwrap();
        assert_eq!(r.labels.as_slice(), &[0, 0, 0]);
        assert_abs_diff_eq!(r.modularity, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn infinite_gain_tol_keeps_one_community() {
        let g = cliques(&[6, 6], Some(0.1));
        let params = RecursiveParams {
            gain_tol: f64::INFINITY,
            ..RecursiveParams::default()
        };
        let r = recursive_partition(&g, &MboConfig::new(1.0, 2), &params).unwrap();
        assert_eq!(r.labels.n_communities(), 1);
        assert_eq!(r.history.len(), 1);
    }
}
