//! Chow-Liu trees: maximum spanning trees under pairwise empirical mutual
//! information.

use crate::dataset::{DataSet, PairCounts};
use crate::error::Result;
use crate::model::Edge;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedEdge {
    pub edge: Edge,
    /// Mutual information in nats.
    pub weight: f64,
}

/// Empirical mutual information of `(X_i, X_j)` in nats, with `0 log 0 = 0`.
pub fn mutual_information(ds: &DataSet, i: usize, j: usize) -> Result<f64> {
    Ok(mi_from_counts(&ds.pair_counts(i, j)?))
}

pub(crate) fn mi_from_counts(c: &PairCounts) -> f64 {
    let n = c.total() as f64;
    let row = [(c.n00 + c.n01) as f64, (c.n10 + c.n11) as f64];
    let col = [(c.n00 + c.n10) as f64, (c.n01 + c.n11) as f64];
    let cells = [
        (c.n00 as f64, 0, 0),
        (c.n01 as f64, 0, 1),
        (c.n10 as f64, 1, 0),
        (c.n11 as f64, 1, 1),
    ];
    let mut mi = 0.0;
    for (joint, a, b) in cells {
        if joint > 0.0 {
            mi += joint / n * (joint * n / (row[a] * col[b])).ln();
        }
    }
    // rounding can leave independent pairs slightly negative
    mi.max(0.0)
}

/// Mutual information of every variable pair, lexicographic order.
pub fn mutual_information_edges(ds: &DataSet) -> Vec<WeightedEdge> {
    Edge::complete(ds.n_vars())
        .into_iter()
        .map(|edge| WeightedEdge {
            edge,
            weight: mutual_information(ds, edge.lo(), edge.hi())
                .expect("complete-graph edges are in range"),
        })
        .collect()
}

/// Kruskal's algorithm over MI weights. Among equal weights the
/// lexicographically smaller edge is taken first.
pub fn chow_liu_tree(ds: &DataSet) -> Vec<Edge> {
    let mut weighted = mutual_information_edges(ds);
    weighted.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.edge.cmp(&b.edge)));

    let n = ds.n_vars();
    let mut sets = DisjointSets::new(n);
    let mut tree = Vec::with_capacity(n - 1);
    for we in weighted {
        if sets.union(we.edge.lo(), we.edge.hi()) {
            tree.push(we.edge);
            if tree.len() == n - 1 {
                break;
            }
        }
    }
    tree.sort();
    tree
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    /// Returns false if `a` and `b` were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}
