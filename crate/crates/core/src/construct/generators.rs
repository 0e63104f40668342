use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::FeatureMatrix;
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::partition::Labels;

/// Community index per node, contiguous from 0.
pub type GroundTruth = Labels;

/// Standard deviation of the per-coordinate noise (variance ≈ 0.02).
pub const TWO_MOONS_NOISE: f64 = 0.14;

/// Two unit half-circles embedded in `ambient_dim` dimensions.
///
/// The first moon is the upper arc `(cos θ, sin θ)`; the second is the lower
/// arc shifted by `(1, -0.5)`, i.e. `(1 + cos θ, -0.5 - sin θ)`, with
/// `θ ~ U[0, π]`. Gaussian noise of std `noise_sigma` is added to every
/// coordinate. Points are ordered moon by moon; odd counts give the extra
/// point to the first moon.
pub fn two_moons(
    n_points: usize,
    ambient_dim: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<(FeatureMatrix, GroundTruth)> {
    if ambient_dim < 2 {
        return Err(Error::param("ambient_dim", format!("must be at least 2, got {ambient_dim}")));
    }
    if n_points == 0 {
        return Err(Error::param("n_points", "must be at least 1"));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::param("noise_sigma", "must be finite and nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma).expect("validated sigma");
    let first = n_points.div_ceil(2);
    let mut values = Vec::with_capacity(n_points * ambient_dim);
    let mut labels = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let theta = rng.random_range(0.0..=PI);
        let (x, y, label) = if i < first {
            (theta.cos(), theta.sin(), 0)
        } else {
            (1.0 + theta.cos(), -0.5 - theta.sin(), 1)
        };
        values.push(x);
        values.push(y);
        values.extend(std::iter::repeat_n(0.0, ambient_dim - 2));
        labels.push(label);
    }
    if noise_sigma > 0.0 {
        for v in &mut values {
            *v += noise.sample(&mut rng);
        }
    }
    Ok((FeatureMatrix::new(n_points, ambient_dim, values)?, Labels::new(labels)))
}

/// Appends `j` in `range` to `out` independently with probability `p`,
/// skipping geometrically between successes.
fn bernoulli_run(range: std::ops::Range<usize>, p: f64, rng: &mut ChaCha8Rng, out: &mut Vec<usize>) {
    if p <= 0.0 || range.is_empty() {
        return;
    }
    if p >= 1.0 {
        out.extend(range);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut j = range.start;
    loop {
        let u: f64 = 1.0 - rng.random::<f64>();
        let skip = (u.ln() / log_q).floor();
        if skip >= (range.end - j) as f64 {
            return;
        }
        j += skip as usize;
        out.push(j);
        j += 1;
    }
}

/// Equal-size blocks with independent unit-weight edges.
///
/// Within-block pairs appear with probability `avg_degree_in / (b - 1)` and
/// between-block pairs with `avg_degree_out / (n - b)`, where `b` is the
/// block size, so the expected degrees match the requested averages.
pub fn planted_partition(
    n_nodes: usize,
    n_communities: usize,
    avg_degree_in: f64,
    avg_degree_out: f64,
    seed: u64,
) -> Result<(SparseGraph, GroundTruth)> {
    if n_communities == 0 || n_nodes == 0 || !n_nodes.is_multiple_of(n_communities) {
        return Err(Error::param(
            "n_communities",
            format!("{n_nodes} nodes cannot be split into {n_communities} equal blocks"),
        ));
    }
    let bs = n_nodes / n_communities;
    let p_in = if bs > 1 { avg_degree_in / (bs - 1) as f64 } else { 0.0 };
    let p_out = if n_communities > 1 { avg_degree_out / (n_nodes - bs) as f64 } else { 0.0 };
    for (name, p, avg) in [("avg_degree_in", p_in, avg_degree_in), ("avg_degree_out", p_out, avg_degree_out)] {
        if !(0.0..=1.0).contains(&p) || !(avg >= 0.0) {
            return Err(Error::param(name, format!("gives edge probability {p} outside [0, 1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    let mut row = Vec::new();
    for i in 0..n_nodes {
        let block_end = (i / bs + 1) * bs;
        row.clear();
        bernoulli_run(i + 1..block_end, p_in, &mut rng, &mut row);
        bernoulli_run(block_end..n_nodes, p_out, &mut rng, &mut row);
        edges.extend(row.iter().map(|&j| (i, j, 1.0)));
    }
    let graph = SparseGraph::from_edges(n_nodes, edges)?;
    let truth = Labels::new((0..n_nodes).map(|i| i / bs).collect());
    Ok((graph, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn moons_shapes_and_arcs() {
        let (x, truth) = two_moons(2000, 100, TWO_MOONS_NOISE, 1).unwrap();
        assert_eq!((x.n_points(), x.dim(), truth.len()), (2000, 100, 2000));
        assert_eq!(truth.as_slice().iter().filter(|&&l| l == 1).count(), 1000);

        let (clean, truth) = two_moons(101, 3, 0.0, 5).unwrap();
        for (row, &l) in clean.rows().zip(truth.as_slice()) {
            let (cx, cy) = if l == 0 { (0.0, 0.0) } else { (1.0, -0.5) };
            assert_abs_diff_eq!((row[0] - cx).hypot(row[1] - cy), 1.0, epsilon = 1e-12);
            if l == 0 {
                assert!(row[1] >= 0.0);
            } else {
                assert!(row[1] <= -0.5);
            }
            assert_eq!(row[2], 0.0);
        }
    }

    #[test]
    fn moons_deterministic_and_validated() {
        assert_eq!(two_moons(50, 4, 0.1, 9).unwrap(), two_moons(50, 4, 0.1, 9).unwrap());
        assert_ne!(two_moons(50, 4, 0.1, 9).unwrap().0, two_moons(50, 4, 0.1, 10).unwrap().0);
        assert!(two_moons(10, 1, 0.1, 0).is_err());
        assert!(two_moons(10, 2, -0.1, 0).is_err());
    }

    #[test]
    fn planted_disconnected_blocks() {
        let (g, truth) = planted_partition(120, 4, 6.0, 0.0, 3).unwrap();
        for (i, j, _) in g.edges() {
            assert_eq!(truth.as_slice()[i], truth.as_slice()[j]);
        }
        assert_eq!(planted_partition(120, 4, 6.0, 0.0, 3).unwrap().0, g);
    }

    #[test]
    fn planted_expected_degree() {
        let (n, avg_in, avg_out) = (600, 8.0, 2.0);
        let mut total = 0.0;
        for seed in 0..10 {
            total += planted_partition(n, 6, avg_in, avg_out, seed).unwrap().0.total_weight();
        }
        let expected = 10.0 * n as f64 * (avg_in + avg_out);
        assert!((total - expected).abs() <= 0.05 * expected, "{total} vs {expected}");
    }

    #[test]
    fn planted_rejects_bad_probabilities() {
        assert!(planted_partition(20, 4, 10.0, 1.0, 0).is_err());
        assert!(planted_partition(20, 3, 1.0, 1.0, 0).is_err());
        assert!(planted_partition(20, 4, 1.0, 20.0, 0).is_err());
        let (full, _) = planted_partition(10, 2, 4.0, 0.0, 0).unwrap();
        assert_eq!(full.n_edges(), 20);
    }
}
