//! Partition quality against ground truth, and agreement across runs.

use crate::error::{Error, Result};
use crate::partition::Labels;

fn check_lengths(predicted: &Labels, truth: &Labels) -> Result<()> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", truth.len()),
            actual: format!("{} labels", predicted.len()),
        });
    }
    if predicted.is_empty() {
        return Err(Error::param("labels", "must be nonempty"));
    }
    Ok(())
}

/// Contingency table over the contiguous relabelings of both inputs.
fn contingency(predicted: &Labels, truth: &Labels) -> Vec<Vec<usize>> {
    let p = predicted.relabeled_contiguous();
    let t = truth.relabeled_contiguous();
    let mut table = vec![vec![0usize; t.n_slots()]; p.n_slots()];
    for (&a, &b) in p.as_slice().iter().zip(t.as_slice()) {
        table[a][b] += 1;
    }
    table
}

/// `(1/N) Σ_α max_β #{i : predicted_i = α, truth_i = β}`.
pub fn purity(predicted: &Labels, truth: &Labels) -> Result<f64> {
    check_lengths(predicted, truth)?;
    let table = contingency(predicted, truth);
    let hits: usize = table.iter().map(|row| row.iter().copied().max().unwrap_or(0)).sum();
    Ok(hits as f64 / predicted.len() as f64)
}

/// Largest label count for which every assignment is enumerated.
pub const EXHAUSTIVE_LIMIT: usize = 6;
/// Largest label count handled by exact assignment at all.
pub const ASSIGNMENT_LIMIT: usize = 12;

/// Fraction of nodes correctly labelled under the best one-to-one matching
/// of predicted labels to truth labels.
///
/// Above [`ASSIGNMENT_LIMIT`] labels on either side this returns
/// [`purity`] instead.
pub fn classification_rate(predicted: &Labels, truth: &Labels) -> Result<f64> {
    check_lengths(predicted, truth)?;
    let table = contingency(predicted, truth);
    let size = table.len().max(table[0].len());
    if size > ASSIGNMENT_LIMIT {
        return purity(predicted, truth);
    }
    let mut square = vec![vec![0i64; size]; size];
    for (a, row) in table.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            square[a][b] = c as i64;
        }
    }
    let matched = if size <= EXHAUSTIVE_LIMIT {
        best_permutation(&square)
    } else {
        hungarian_max(&square)
    };
    Ok(matched as f64 / predicted.len() as f64)
}

/// Maximum of `Σ_i w[i][σ(i)]` over all permutations (Heap's algorithm).
fn best_permutation(w: &[Vec<i64>]) -> i64 {
    let n = w.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let score = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| w[i][j]).sum::<i64>();
    let mut best = score(&perm);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.max(score(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Maximum-weight perfect matching on a square matrix via the O(n³)
/// Hungarian method with potentials (run on negated weights).
fn hungarian_max(w: &[Vec<i64>]) -> i64 {
    let n = w.len();
    let cost = |i: usize, j: usize| -w[i - 1][j - 1];
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| w[p[j] - 1][j - 1]).sum()
}

/// One seeded run of a repeated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub modularity: f64,
    pub classification: Option<f64>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchField {
    Modularity,
    Classification,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunBatch {
    pub runs: Vec<RunRecord>,
}

impl RunBatch {
    pub fn new(runs: Vec<RunRecord>) -> Result<Self> {
        let batch = RunBatch { runs };
        batch.validate()?;
        Ok(batch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs.is_empty() {
            return Err(Error::param("batch", "must contain at least one run"));
        }
        for r in &self.runs {
            if !r.modularity.is_finite() || r.classification.is_some_and(|c| !c.is_finite()) {
                return Err(Error::NonFinite("run batch"));
            }
        }
        Ok(())
    }

    pub fn push(&mut self, run: RunRecord) {
        self.runs.push(run);
    }

    /// Values of `field`, skipping runs where it is absent.
    pub fn values(&self, field: BatchField) -> Vec<f64> {
        self.runs
            .iter()
            .filter_map(|r| match field {
                BatchField::Modularity => Some(r.modularity),
                BatchField::Classification => r.classification,
            })
            .collect()
    }

    pub fn best(&self, field: BatchField) -> Option<f64> {
        self.values(field).into_iter().reduce(f64::max)
    }

    /// Median wall time; the mean of the middle pair for even counts.
    pub fn median_time_ms(&self) -> Option<f64> {
        let mut t: Vec<f64> = self.runs.iter().map(|r| r.wall_time_ms).collect();
        if t.is_empty() {
            return None;
        }
        t.sort_by(f64::total_cmp);
        let mid = t.len() / 2;
        Some(if t.len() % 2 == 1 { t[mid] } else { 0.5 * (t[mid - 1] + t[mid]) })
    }
}

/// Fraction of runs whose `field` is at least `(1 - tol) · best`.
///
/// Runs lacking the field count as misses. Returns 0 when no run has it.
pub fn consistency(batch: &RunBatch, field: BatchField, tol: f64) -> f64 {
    let Some(best) = batch.best(field) else {
        return 0.0;
    };
    let cutoff = best - tol * best.abs();
    let hits = batch.values(field).into_iter().filter(|&x| x >= cutoff).count();
    hits as f64 / batch.runs.len() as f64
}
