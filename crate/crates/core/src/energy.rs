//! Cut, volume, total variation, modularity and its balanced-cut / balanced-TV
//! reformulations, plus the Ginzburg-Landau and semi-supervised energies.
//!
//! All double sums over `i, j ∈ A_ℓ` run over ordered pairs, consistent with
//! the `2m` normalization: the single-community partition has modularity
//! `1 - γ`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::partition::{Labels, Supervision};

fn check_subset(graph: &SparseGraph, subset: &[usize]) -> Result<Vec<bool>> {
    let mut member = vec![false; graph.n_nodes()];
    for &i in subset {
        if i >= graph.n_nodes() {
            return Err(Error::NodeOutOfRange {
                index: i,
                n_nodes: graph.n_nodes(),
            });
        }
        member[i] = true;
    }
    Ok(member)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::param("gamma", format!("must be positive and finite, got {gamma}")))
    }
}

fn check_rows(graph: &SparseGraph, u: &DMatrix<f64>) -> Result<()> {
    if u.nrows() != graph.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} rows", graph.n_nodes()),
            actual: format!("{} rows", u.nrows()),
        });
    }
    Ok(())
}

fn check_labels(graph: &SparseGraph, labels: &Labels) -> Result<()> {
    if labels.len() != graph.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", graph.n_nodes()),
            actual: format!("{} labels", labels.len()),
        });
    }
    Ok(())
}

/// `Cut(S, S^c) = Σ_{i∈S, j∉S} w_ij`.
pub fn cut(graph: &SparseGraph, subset: &[usize]) -> Result<f64> {
    let member = check_subset(graph, subset)?;
    let mut total = 0.0;
    for i in (0..graph.n_nodes()).filter(|&i| member[i]) {
        for (j, w) in graph.neighbors(i) {
            if !member[j] {
                total += w;
            }
        }
    }
    Ok(total)
}

/// `vol S = Σ_{i∈S} k_i`. Repeated indices are counted once.
pub fn volume(graph: &SparseGraph, subset: &[usize]) -> Result<f64> {
    let member = check_subset(graph, subset)?;
    Ok((0..graph.n_nodes())
        .filter(|&i| member[i])
        .map(|i| graph.degree(i))
        .sum())
}

/// Matrix graph total variation `Σ_ℓ ½ Σ_ij w_ij |u_iℓ - u_jℓ|`.
pub fn graph_tv(graph: &SparseGraph, u: &DMatrix<f64>) -> Result<f64> {
    check_rows(graph, u)?;
    let mut total = 0.0;
    for (i, j, w) in graph.edges() {
        let mut diff = 0.0;
        for l in 0..u.ncols() {
            diff += (u[(i, l)] - u[(j, l)]).abs();
        }
        // Each undirected edge stands for both ordered pairs; the ½ cancels.
        total += w * diff;
    }
    Ok(total)
}

/// Per-community internal weight (ordered pairs), boundary weight and volume.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityStats {
    pub internal: Vec<f64>,
    pub cut: Vec<f64>,
    pub volume: Vec<f64>,
}

impl CommunityStats {
    pub fn compute(graph: &SparseGraph, labels: &Labels, n_slots: usize) -> Result<Self> {
        check_labels(graph, labels)?;
        let mut internal = vec![0.0; n_slots];
        let mut cut = vec![0.0; n_slots];
        let mut volume = vec![0.0; n_slots];
        let lab = labels.as_slice();
        for i in 0..graph.n_nodes() {
            let li = lab[i];
            if li >= n_slots {
                return Err(Error::param(
                    "labels",
                    format!("label {li} does not fit in {n_slots} communities"),
                ));
            }
            volume[li] += graph.degree(i);
            for (j, w) in graph.neighbors(i) {
                if lab[j] == li {
                    internal[li] += w;
                } else {
                    cut[li] += w;
                }
            }
        }
        Ok(CommunityStats {
            internal,
            cut,
            volume,
        })
    }
}

/// `Q = (1/2m) Σ_ℓ Σ_{i,j∈A_ℓ} (w_ij - γ k_i k_j / 2m)`.
pub fn modularity(graph: &SparseGraph, labels: &Labels, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let two_m = graph.total_weight();
    if two_m <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let stats = CommunityStats::compute(graph, labels, labels.n_slots())?;
    let q: f64 = stats
        .internal
        .iter()
        .zip(&stats.volume)
        .map(|(&win, &vol)| win - gamma * vol * vol / two_m)
        .sum();
    Ok(q / two_m)
}

/// `Σ_ℓ [Cut(A_ℓ, A_ℓ^c) + (γ/2m)(vol A_ℓ)²]`.
pub fn balanced_cut_i(graph: &SparseGraph, labels: &Labels, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let two_m = graph.total_weight();
    if two_m <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let stats = CommunityStats::compute(graph, labels, labels.n_slots())?;
    Ok(stats
        .cut
        .iter()
        .zip(&stats.volume)
        .map(|(&c, &vol)| c + gamma / two_m * vol * vol)
        .sum())
}

/// `Σ_ℓ [Cut + (γ/2m)(vol A_ℓ - 2m/n̂)²] + γ·2m/n̂`, summing over all `n̂`
/// columns including empty ones.
pub fn balanced_cut_ii(graph: &SparseGraph, labels: &Labels, gamma: f64, nhat: usize) -> Result<f64> {
    check_gamma(gamma)?;
    if nhat < 1 {
        return Err(Error::param("nhat", "must be at least 1"));
    }
    let two_m = graph.total_weight();
    if two_m <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let stats = CommunityStats::compute(graph, labels, nhat)?;
    let target = two_m / nhat as f64;
    let sum: f64 = stats
        .cut
        .iter()
        .zip(&stats.volume)
        .map(|(&c, &vol)| c + gamma / two_m * (vol - target).powi(2))
        .sum();
    Ok(sum + gamma * target)
}

/// `‖k^T u‖₂²`.
fn degree_projection_sq(graph: &SparseGraph, u: &DMatrix<f64>) -> f64 {
    (0..u.ncols())
        .map(|l| {
            let s: f64 = (0..u.nrows()).map(|i| graph.degree(i) * u[(i, l)]).sum();
            s * s
        })
        .sum()
}

/// `|u|_TV + (γ/2m)‖k^T u‖₂²`.
pub fn balanced_tv_i(graph: &SparseGraph, u: &DMatrix<f64>, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let two_m = graph.total_weight();
    if two_m <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    Ok(graph_tv(graph, u)? + gamma / two_m * degree_projection_sq(graph, u))
}

/// Dirichlet energy `trace(u^T L u) = Σ_{i<j} w_ij ‖u_i - u_j‖²`.
pub fn dirichlet_energy(graph: &SparseGraph, u: &DMatrix<f64>) -> Result<f64> {
    check_rows(graph, u)?;
    Ok(graph
        .edges()
        .map(|(i, j, w)| {
            let d: f64 = (0..u.ncols()).map(|l| (u[(i, l)] - u[(j, l)]).powi(2)).sum();
            w * d
        })
        .sum())
}

/// Multiwell potential `P(v) = Π_ℓ ¼‖v - e_ℓ‖²`, zero exactly at the simplex
/// corners.
pub fn multiwell_potential(row: &[f64]) -> f64 {
    let n = row.len();
    let norm_sq: f64 = row.iter().map(|x| x * x).sum();
    (0..n)
        .map(|l| 0.25 * (norm_sq - 2.0 * row[l] + 1.0))
        .product()
}

/// Ginzburg-Landau energy
/// `trace(u^T L u) + (1/ε) Σ_i P(u_i) + (γ/2m)‖k^T u‖₂²`.
///
/// Diagnostic only; the MBO scheme never optimizes it directly.
pub fn gl_energy(graph: &SparseGraph, u: &DMatrix<f64>, gamma: f64, epsilon: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
    }
    let two_m = graph.total_weight();
    if two_m <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let dirichlet = dirichlet_energy(graph, u)?;
    let mut row = vec![0.0; u.ncols()];
    let mut potential = 0.0;
    for i in 0..u.nrows() {
        for (l, r) in row.iter_mut().enumerate() {
            *r = u[(i, l)];
        }
        potential += multiwell_potential(&row);
    }
    Ok(dirichlet + potential / epsilon + gamma / two_m * degree_projection_sq(graph, u))
}

/// `λ Σ_{(i,ℓ)∈χ} (u_iℓ - f_iℓ)²`.
pub fn fidelity_energy(u: &DMatrix<f64>, sup: &Supervision) -> Result<f64> {
    sup.check_shape(u.nrows(), u.ncols())?;
    Ok(sup.weight()
        * sup
            .entries()
            .iter()
            .map(|e| (u[(e.node, e.community)] - e.target).powi(2))
            .sum::<f64>())
}

/// Balanced TV plus the supervision fidelity term.
pub fn ssl_energy(graph: &SparseGraph, u: &DMatrix<f64>, gamma: f64, sup: &Supervision) -> Result<f64> {
    Ok(balanced_tv_i(graph, u, gamma)? + fidelity_energy(u, sup)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{PartitionMatrix, SupervisedEntry};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn path3() -> SparseGraph {
        SparseGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    fn k3() -> SparseGraph {
        SparseGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    fn edge2() -> SparseGraph {
        SparseGraph::from_edges(2, [(0, 1, 1.0)]).unwrap()
    }

    fn labels(v: &[usize]) -> Labels {
        Labels::new(v.to_vec())
    }

    #[test]
    fn cut_examples() {
        assert_eq!(cut(&path3(), &[0]).unwrap(), 1.0);
        assert_eq!(cut(&path3(), &[]).unwrap(), 0.0);
        assert_eq!(cut(&k3(), &[0, 1]).unwrap(), 2.0);
        assert!(matches!(
            cut(&k3(), &[5]),
            Err(Error::NodeOutOfRange { index: 5, .. })
        ));
    }

    #[test]
    fn volume_examples() {
        assert_eq!(volume(&edge2(), &[0]).unwrap(), 1.0);
        assert_eq!(volume(&k3(), &[0, 1]).unwrap(), 4.0);
        assert_eq!(volume(&k3(), &[0, 1, 2]).unwrap(), k3().total_weight());
        assert!(volume(&k3(), &[3]).is_err());
    }

    #[test]
    fn tv_examples() {
        let indicator = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        assert_eq!(graph_tv(&path3(), &indicator).unwrap(), 1.0);
        let constant = DMatrix::from_element(3, 2, 0.7);
        assert_eq!(graph_tv(&path3(), &constant).unwrap(), 0.0);
        let u = PartitionMatrix::from_labels(&labels(&[0, 0, 1]), 2).unwrap().to_dense();
        assert_eq!(graph_tv(&k3(), &u).unwrap(), 4.0);
        assert!(graph_tv(&k3(), &DMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn modularity_examples() {
        assert_abs_diff_eq!(modularity(&k3(), &labels(&[0, 0, 0]), 0.7).unwrap(), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(modularity(&edge2(), &labels(&[0, 1]), 1.0).unwrap(), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(modularity(&k3(), &labels(&[0, 0, 1]), 1.0).unwrap(), -2.0 / 9.0, epsilon = 1e-15);
        let empty = SparseGraph::from_edges(2, []).unwrap();
        assert!(matches!(modularity(&empty, &labels(&[0, 1]), 1.0), Err(Error::EmptyGraph)));
        assert!(modularity(&k3(), &labels(&[0, 0, 0]), 0.0).is_err());
    }

    #[test]
    fn balanced_cut_examples() {
        assert_abs_diff_eq!(balanced_cut_i(&k3(), &labels(&[0, 0, 0]), 0.5).unwrap(), 0.5 * 6.0);
        assert_abs_diff_eq!(balanced_cut_i(&edge2(), &labels(&[0, 1]), 1.0).unwrap(), 3.0);
        assert_abs_diff_eq!(balanced_cut_ii(&edge2(), &labels(&[0, 1]), 1.0, 2).unwrap(), 3.0);
        // Volumes 2 and 2 of 2m = 4 at n̂ = 2: quadratic term vanishes.
        let g = SparseGraph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_abs_diff_eq!(
            balanced_cut_ii(&g, &labels(&[0, 0, 1, 1]), 1.0, 2).unwrap(),
            0.0 + 1.0 * 4.0 / 2.0
        );
        assert!(balanced_cut_ii(&g, &labels(&[0, 0, 1, 1]), 1.0, 0).is_err());
    }

    #[test]
    fn balanced_tv_examples() {
        assert_eq!(balanced_tv_i(&k3(), &DMatrix::zeros(3, 2), 1.0).unwrap(), 0.0);
        let id = DMatrix::identity(2, 2);
        assert_abs_diff_eq!(balanced_tv_i(&edge2(), &id, 1.0).unwrap(), 3.0);
    }

    #[test]
    fn gl_examples() {
        let id = DMatrix::identity(2, 2);
        for eps in [1e-3, 1.0, 10.0] {
            assert_abs_diff_eq!(gl_energy(&edge2(), &id, 1.0, eps).unwrap(), 3.0, epsilon = 1e-14);
        }
        // P(0) = (1/4)^n̂.
        let zero = DMatrix::zeros(3, 2);
        assert_abs_diff_eq!(gl_energy(&k3(), &zero, 1.0, 0.5).unwrap(), 3.0 * 0.0625 / 0.5);
        assert!(gl_energy(&k3(), &zero, 1.0, 0.0).is_err());
    }

    #[test]
    fn gl_on_partition_equals_dirichlet_balanced() {
        let g = k3();
        let u = PartitionMatrix::from_labels(&labels(&[1, 0, 1]), 3).unwrap().to_dense();
        let expected = dirichlet_energy(&g, &u).unwrap()
            + balanced_tv_i(&g, &u, 1.3).unwrap()
            - graph_tv(&g, &u).unwrap();
        assert_abs_diff_eq!(gl_energy(&g, &u, 1.3, 1e-6).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn potential_vanishes_only_at_corners() {
        assert_eq!(multiwell_potential(&[0.0, 1.0, 0.0]), 0.0);
        assert!(multiwell_potential(&[0.5, 0.5, 0.0]) > 0.0);
        assert!(multiwell_potential(&[0.0, 0.0, 0.0]) > 0.0);
    }

    #[test]
    fn ssl_examples() {
        let g = edge2();
        let u = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.0, 1.0]);
        let none = Supervision::new(vec![], 0.0).unwrap();
        assert_eq!(ssl_energy(&g, &u, 1.0, &none).unwrap(), balanced_tv_i(&g, &u, 1.0).unwrap());
        let matched = Supervision::from_known_labels(&[(1, 1)], 2, 5.0).unwrap();
        assert_eq!(fidelity_energy(&u, &matched).unwrap(), 0.0);
        let single = Supervision::new(
            vec![SupervisedEntry { node: 0, community: 0, target: 1.0 }],
            2.0,
        )
        .unwrap();
        assert_abs_diff_eq!(fidelity_energy(&u, &single).unwrap(), 0.5);
        let bad = Supervision::new(
            vec![SupervisedEntry { node: 4, community: 0, target: 1.0 }],
            2.0,
        )
        .unwrap();
        assert!(ssl_energy(&g, &u, 1.0, &bad).is_err());
    }

    fn arb_graph() -> impl Strategy<Value = SparseGraph> {
        (3usize..16).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n, 0.1f64..3.0), n..4 * n).prop_map(move |edges| {
                // A spanning path keeps 2m > 0; extra chords skip path pairs.
                let mut pairs = std::collections::BTreeMap::new();
                for i in 1..n {
                    pairs.insert((i - 1, i), 0.5);
                }
                for (i, j, w) in edges {
                    if i != j {
                        pairs.entry((i.min(j), i.max(j))).or_insert(w);
                    }
                }
                SparseGraph::from_edges(n, pairs.into_iter().map(|((i, j), w)| (i, j, w))).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn modularity_matches_balanced_cut(
            g in arb_graph(),
            seed in prop::collection::vec(0usize..4, 16),
            gamma in 0.05f64..3.0,
        ) {
            let lab = Labels::new(seed[..g.n_nodes()].to_vec());
            let q = modularity(&g, &lab, gamma).unwrap();
            let bc = balanced_cut_i(&g, &lab, gamma).unwrap();
            prop_assert!((q - (1.0 - bc / g.total_weight())).abs() <= 1e-12 * q.abs().max(1.0));
            let bc2 = balanced_cut_ii(&g, &lab, gamma, 4).unwrap();
            prop_assert!((bc - bc2).abs() <= 1e-10);
            let u = PartitionMatrix::from_labels(&lab, 4).unwrap().to_dense();
            let btv = balanced_tv_i(&g, &u, gamma).unwrap();
            prop_assert!((btv - bc).abs() <= 1e-12 * bc.abs().max(1.0));
        }

        #[test]
        fn modularity_invariant_under_column_permutation(
            g in arb_graph(),
            seed in prop::collection::vec(0usize..3, 16),
        ) {
            let lab = Labels::new(seed[..g.n_nodes()].to_vec());
            let swapped = Labels::new(lab.as_slice().iter().map(|&l| 2 - l).collect());
            let a = modularity(&g, &lab, 1.0).unwrap();
            let b = modularity(&g, &swapped, 1.0).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn energies_invariant_under_node_relabeling(
            g in arb_graph(),
            seed in prop::collection::vec(0usize..3, 16),
            shift in 0usize..16,
        ) {
            let n = g.n_nodes();
            let perm: Vec<usize> = (0..n).map(|i| (i * 7 + shift) % n).collect();
            let mut inverse_ok = perm.clone();
            inverse_ok.sort_unstable();
            prop_assume!(inverse_ok == (0..n).collect::<Vec<_>>());
            let lab = Labels::new(seed[..n].to_vec());
            let mut moved = vec![0; n];
            for i in 0..n {
                moved[perm[i]] = lab.as_slice()[i];
            }
            let moved = Labels::new(moved);
            let h = g.permuted(&perm).unwrap();
            let q1 = modularity(&g, &lab, 0.8).unwrap();
            let q2 = modularity(&h, &moved, 0.8).unwrap();
            prop_assert!((q1 - q2).abs() <= 1e-12);
            let u1 = PartitionMatrix::from_labels(&lab, 3).unwrap().to_dense();
            let u2 = PartitionMatrix::from_labels(&moved, 3).unwrap().to_dense();
            let e1 = gl_energy(&g, &u1, 0.8, 0.1).unwrap();
            let e2 = gl_energy(&h, &u2, 0.8, 0.1).unwrap();
            prop_assert!((e1 - e2).abs() <= 1e-12 * e1.abs().max(1.0));
        }

        #[test]
        fn tv_of_indicator_is_cut(g in arb_graph(), mask in prop::collection::vec(any::<bool>(), 16)) {
            let n = g.n_nodes();
            let subset: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
            let u = DMatrix::from_fn(n, 1, |i, _| if mask[i] { 1.0 } else { 0.0 });
            prop_assert!((graph_tv(&g, &u).unwrap() - cut(&g, &subset).unwrap()).abs() <= 1e-12);
        }
    }
}
