use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{sq_dist, FeatureMatrix};

const LEAF_SIZE: usize = 16;

enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

/// Exact k-d tree over the rows of a feature matrix.
pub struct KdTree<'a> {
    points: &'a FeatureMatrix,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Candidate ordered by `(distance, index)` so ties resolve deterministically.
#[derive(Clone, Copy, PartialEq)]
struct Candidate(f64, usize);

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl<'a> KdTree<'a> {
    pub fn build(points: &'a FeatureMatrix) -> Self {
        let mut tree = KdTree {
            points,
            order: (0..points.n_points()).collect(),
            nodes: Vec::new(),
        };
        tree.build_node(0, points.n_points());
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let dim = (0..self.points.dim())
            .map(|d| {
                let (lo, hi) = self.order[start..end].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let x = self.points.row(i)[d];
                    (lo.min(x), hi.max(x))
                });
                (d, hi - lo)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(d, _)| d)
            .unwrap_or(0);
        let mid = (start + end) / 2;
        let points = self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points.row(a)[dim].total_cmp(&points.row(b)[dim])
        });
        let value = points.row(self.order[mid])[dim];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split { dim, value, left, right };
        id
    }

    /// The `k` nearest rows to row `query`, excluding itself, as
    /// `(index, squared distance)` sorted by distance then index.
    pub fn nearest(&self, query: usize, k: usize) -> Vec<(usize, f64)> {
        let q = self.points.row(query);
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if k > 0 {
            self.search(0, q, query, k, &mut heap);
        }
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort();
        out.into_iter().map(|Candidate(d, i)| (i, d)).collect()
    }

    fn search(&self, node: usize, q: &[f64], skip: usize, k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if i == skip {
                        continue;
                    }
                    let c = Candidate(sq_dist(q, self.points.row(i)), i);
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, skip, k, heap);
                if heap.len() < k || diff * diff <= heap.peek().unwrap().0 {
                    self.search(far, q, skip, k, heap);
                }
            }
        }
    }
}
