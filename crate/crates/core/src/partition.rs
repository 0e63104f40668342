//! Community assignments in label-vector and one-hot matrix form, plus the
//! supervision data used by the fidelity term.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Length-`N` vector of community indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labels(Vec<usize>);

impl Labels {
    pub fn new(assignment: Vec<usize>) -> Self {
        Labels(assignment)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// One past the largest label, i.e. the smallest valid `n̂`.
    pub fn n_slots(&self) -> usize {
        self.0.iter().max().map_or(0, |&m| m + 1)
    }

    /// Number of distinct labels actually used.
    pub fn n_communities(&self) -> usize {
        let mut seen: Vec<usize> = self.0.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// Renumbers labels to `0..n` in order of first appearance.
    pub fn relabeled_contiguous(&self) -> Labels {
        let mut map = BTreeMap::new();
        let mut next = 0;
        let out = self
            .0
            .iter()
            .map(|&l| {
                *map.entry(l).or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        Labels(out)
    }

    /// Node lists per label, indexed by label id up to `n_slots`.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_slots()];
        for (i, &l) in self.0.iter().enumerate() {
            groups[l].push(i);
        }
        groups
    }
}

impl From<Vec<usize>> for Labels {
    fn from(v: Vec<usize>) -> Self {
        Labels(v)
    }
}

/// `N × n̂` one-hot membership matrix.
///
/// Stored as a label vector; every row has exactly one entry equal to one by
/// construction. Dense access goes through [`PartitionMatrix::to_dense`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMatrix {
    assignment: Vec<usize>,
    n_communities: usize,
}

impl PartitionMatrix {
    pub fn from_labels(labels: &Labels, n_communities: usize) -> Result<Self> {
        if n_communities == 0 {
            return Err(Error::param("n_communities", "must be at least 1"));
        }
        if let Some(&bad) = labels.as_slice().iter().find(|&&l| l >= n_communities) {
            return Err(Error::param(
                "labels",
                format!("label {bad} does not fit in {n_communities} columns"),
            ));
        }
        Ok(PartitionMatrix {
            assignment: labels.as_slice().to_vec(),
            n_communities,
        })
    }

    /// Reads a dense matrix whose rows must each be a one-hot vector.
    pub fn from_dense(u: &DMatrix<f64>) -> Result<Self> {
        let mut assignment = Vec::with_capacity(u.nrows());
        for i in 0..u.nrows() {
            let mut hot = None;
            for l in 0..u.ncols() {
                match u[(i, l)] {
                    x if x == 1.0 && hot.is_none() => hot = Some(l),
                    0.0 => {}
                    _ => {
                        return Err(Error::param(
                            "u",
                            format!("row {i} is not a one-hot vector"),
                        ))
                    }
                }
            }
            match hot {
                Some(l) => assignment.push(l),
                None => return Err(Error::param("u", format!("row {i} has no unit entry"))),
            }
        }
        Ok(PartitionMatrix {
            assignment,
            n_communities: u.ncols(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_communities(&self) -> usize {
        self.n_communities
    }

    /// Column holding the unit entry of row `i`.
    pub fn community_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn get(&self, i: usize, l: usize) -> f64 {
        if self.assignment[i] == l {
            1.0
        } else {
            0.0
        }
    }

    pub fn to_labels(&self) -> Labels {
        Labels(self.assignment.clone())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut u = DMatrix::zeros(self.assignment.len(), self.n_communities);
        for (i, &l) in self.assignment.iter().enumerate() {
            u[(i, l)] = 1.0;
        }
        u
    }
}

/// One known entry of the fidelity mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupervisedEntry {
    pub node: usize,
    pub community: usize,
    pub target: f64,
}

/// Fidelity data: mask `χ`, targets `f` on the mask, and weight `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervision {
    entries: Vec<SupervisedEntry>,
    weight: f64,
}

impl Supervision {
    /// General constructor. Targets must be 0 or 1 and no node may carry
    /// more than one unit target, so masked rows stay one-hot compatible.
    pub fn new(entries: Vec<SupervisedEntry>, weight: f64) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::param("weight", format!("must be finite and >= 0, got {weight}")));
        }
        let mut hot: BTreeMap<usize, usize> = BTreeMap::new();
        let mut seen = BTreeMap::new();
        for e in &entries {
            if e.target != 0.0 && e.target != 1.0 {
                return Err(Error::param(
                    "targets",
                    format!("target at ({}, {}) must be 0 or 1", e.node, e.community),
                ));
            }
            if seen.insert((e.node, e.community), ()).is_some() {
                return Err(Error::param(
                    "mask",
                    format!("entry ({}, {}) listed twice", e.node, e.community),
                ));
            }
            if e.target == 1.0 {
                if let Some(prev) = hot.insert(e.node, e.community) {
                    return Err(Error::param(
                        "targets",
                        format!("node {} has unit targets in columns {prev} and {}", e.node, e.community),
                    ));
                }
            }
        }
        Ok(Supervision { entries, weight })
    }

    /// Masks the full row of every listed node with the one-hot row of its
    /// known label.
    pub fn from_known_labels(known: &[(usize, usize)], n_communities: usize, weight: f64) -> Result<Self> {
        let mut entries = Vec::with_capacity(known.len() * n_communities);
        for &(node, label) in known {
            if label >= n_communities {
                return Err(Error::param(
                    "supervision",
                    format!("label {label} of node {node} exceeds {n_communities} communities"),
                ));
            }
            for community in 0..n_communities {
                entries.push(SupervisedEntry {
                    node,
                    community,
                    target: if community == label { 1.0 } else { 0.0 },
                });
            }
        }
        Supervision::new(entries, weight)
    }

    pub fn entries(&self) -> &[SupervisedEntry] {
        &self.entries
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub(crate) fn check_shape(&self, n_nodes: usize, n_communities: usize) -> Result<()> {
        for e in &self.entries {
            if e.node >= n_nodes {
                return Err(Error::NodeOutOfRange { index: e.node, n_nodes });
            }
            if e.community >= n_communities {
                return Err(Error::DimensionMismatch {
                    expected: format!("community < {n_communities}"),
                    actual: format!("mask column {}", e.community),
                });
            }
        }
        Ok(())
    }
}
