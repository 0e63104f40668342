use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{sq_dist, FeatureMatrix, KdTree};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;

/// Above this many points `KnnSearch::Auto` switches to the k-d tree.
pub const BRUTE_FORCE_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KnnSearch {
    #[default]
    Auto,
    BruteForce,
    KdTree,
}

fn brute_nearest(points: &FeatureMatrix, query: usize, k: usize) -> Vec<(usize, f64)> {
    let q = points.row(query);
    let mut all: Vec<(usize, f64)> = (0..points.n_points())
        .filter(|&j| j != query)
        .map(|j| (j, sq_dist(q, points.row(j))))
        .collect();
    let by_dist = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    if k < all.len() {
        all.select_nth_unstable_by(k, by_dist);
        all.truncate(k);
    }
    all.sort_by(by_dist);
    all
}

/// Exact `k` nearest neighbours of every point as `(index, squared
/// distance)`, sorted by distance and then index.
pub fn nearest_neighbors(points: &FeatureMatrix, k: usize, search: KnnSearch) -> Vec<Vec<(usize, f64)>> {
    let n = points.n_points();
    let use_tree = match search {
        KnnSearch::Auto => n > BRUTE_FORCE_LIMIT,
        KnnSearch::BruteForce => false,
        KnnSearch::KdTree => true,
    };
    if use_tree {
        let tree = KdTree::build(points);
        (0..n).into_par_iter().map(|i| tree.nearest(i, k)).collect()
    } else {
        (0..n).into_par_iter().map(|i| brute_nearest(points, i, k)).collect()
    }
}

/// Self-tuning Gaussian k-NN graph with [`KnnSearch::Auto`].
pub fn knn_graph(points: &FeatureMatrix, k: usize, scaling_neighbor: usize) -> Result<SparseGraph> {
    knn_graph_with(points, k, scaling_neighbor, KnnSearch::Auto)
}

/// Self-tuning Gaussian k-NN graph.
///
/// `w_ij = exp(-d_ij² / (σ_i σ_j))` where `σ_i` is the distance from `i` to
/// its `scaling_neighbor`-th nearest neighbour. An edge exists when either
/// endpoint lists the other among its `k` nearest. A zero `σ_i` (duplicate
/// points) falls back to the smallest positive neighbour distance.
pub fn knn_graph_with(
    points: &FeatureMatrix,
    k: usize,
    scaling_neighbor: usize,
    search: KnnSearch,
) -> Result<SparseGraph> {
    let n = points.n_points();
    if k == 0 || k >= n {
        return Err(Error::param("k", format!("must be in 1..{n}, got {k}")));
    }
    if scaling_neighbor == 0 || scaling_neighbor > k {
        return Err(Error::param(
            "scaling_neighbor",
            format!("must be in 1..={k}, got {scaling_neighbor}"),
        ));
    }
    let neighbors = nearest_neighbors(points, k, search);
    let sigma: Vec<f64> = neighbors
        .iter()
        .enumerate()
        .map(|(i, nb)| {
            let s = nb[scaling_neighbor - 1].1.sqrt();
            if s > 0.0 {
                return Ok(s);
            }
            nb.iter()
                .map(|&(_, d)| d.sqrt())
                .find(|&d| d > 0.0)
                .ok_or_else(|| {
                    Error::DegenerateInput(format!(
                        "point {i} coincides with all of its {k} nearest neighbours"
                    ))
                })
        })
        .collect::<Result<_>>()?;
    let mut pairs = BTreeMap::new();
    for (i, nb) in neighbors.iter().enumerate() {
        for &(j, d2) in nb {
            let w = (-d2 / (sigma[i] * sigma[j])).exp();
            if w > 0.0 {
                pairs.insert((i.min(j), i.max(j)), w);
            }
        }
    }
    Ok(SparseGraph::from_unique_pairs(n, &pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::two_moons;
    use crate::energy::modularity;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn collinear_example() {
        let pts = FeatureMatrix::new(3, 1, vec![0.0, 1.0, 3.0]).unwrap();
        let g = knn_graph(&pts, 1, 1).unwrap();
        assert_eq!(g.n_edges(), 2);
        // σ = (1, 1, 2)
        assert_abs_diff_eq!(g.weight(0, 1).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.weight(1, 2).unwrap(), (-4.0f64 / 2.0).exp(), epsilon = 1e-15);
        assert_eq!(g.weight(0, 2), None);
        assert!((0..3).all(|i| g.weight(i, i).is_none()));
    }

    #[test]
    fn duplicates() {
        let pts = FeatureMatrix::new(4, 1, vec![0.0, 0.0, 2.0, 2.0]).unwrap();
        let g = knn_graph(&pts, 2, 1).unwrap();
        assert_eq!(g.weight(0, 1), Some(1.0));
        assert!(g.validate().is_ok());
        let same = FeatureMatrix::new(4, 2, vec![1.0; 8]).unwrap();
        assert!(matches!(knn_graph(&same, 2, 1), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn parameter_checks() {
        let pts = FeatureMatrix::new(3, 1, vec![0.0, 1.0, 3.0]).unwrap();
        assert!(knn_graph(&pts, 3, 1).is_err());
        assert!(knn_graph(&pts, 2, 3).is_err());
        assert!(knn_graph(&pts, 2, 0).is_err());
    }

    #[test]
    fn tree_and_brute_agree() {
        let (pts, _) = two_moons(600, 5, 0.1, 2).unwrap();
        let a = knn_graph_with(&pts, 10, 7, KnnSearch::BruteForce).unwrap();
        let b = knn_graph_with(&pts, 10, 7, KnnSearch::KdTree).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn clean_moons_are_separated() {
        let (pts, truth) = two_moons(300, 2, 0.0, 8).unwrap();
        let g = knn_graph(&pts, 5, 5).unwrap();
        for gamma in [0.2, 0.5, 1.0] {
            assert!(modularity(&g, &truth, gamma).unwrap() > 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn invariants_and_permutation(
            coords in prop::collection::vec(-5.0f64..5.0, 2 * 12..2 * 40),
            k in 1usize..6,
            s_frac in 0.0f64..1.0,
            shift in 1usize..1000,
        ) {
            let n = coords.len() / 2;
            let pts = FeatureMatrix::new(n, 2, coords[..2 * n].to_vec()).unwrap();
            let s = 1 + ((k - 1) as f64 * s_frac) as usize;
            let g = knn_graph(&pts, k, s).unwrap();
            prop_assert!(g.validate().is_ok());
            prop_assert!(g.weights().iter().all(|&w| w > 0.0 && w <= 1.0));
            let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            let h = knn_graph(&pts.permuted(&perm).unwrap(), k, s).unwrap();
            prop_assert_eq!(h, g.permuted(&perm).unwrap());
        }
    }
}
