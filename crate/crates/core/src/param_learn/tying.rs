//! Automatic parameter tying: optimal 1-D k-means over the parameter vector.

use crate::error::{Error, Result};

/// Assignment of each parameter to a cluster, with per-cluster values.
#[derive(Clone, Debug, PartialEq)]
pub struct TyingPartition {
    assignment: Vec<usize>,
    means: Vec<f64>,
}

impl TyingPartition {
    /// Validates that every id is in range and every cluster is used.
    pub fn new(assignment: Vec<usize>, means: Vec<f64>) -> Result<Self> {
        let c = means.len();
        let mut used = vec![false; c];
        for &a in &assignment {
            if a >= c {
                return Err(Error::Config(format!(
                    "cluster id {} out of range for {} clusters",
                    a, c
                )));
            }
            used[a] = true;
        }
        if let Some(empty) = used.iter().position(|u| !u) {
            return Err(Error::Config(format!("cluster {} has no members", empty)));
        }
        Ok(TyingPartition { assignment, means })
    }

    /// Partition whose means are the averages of `params` over each cluster.
    pub fn from_assignment(assignment: Vec<usize>, params: &[f64]) -> Result<Self> {
        if assignment.len() != params.len() {
            return Err(Error::DimensionMismatch {
                expected: params.len(),
                found: assignment.len(),
            });
        }
        let c = assignment.iter().max().map_or(0, |m| m + 1);
        let mut sums = vec![0.0; c];
        let mut sizes = vec![0usize; c];
        for (&a, &p) in assignment.iter().zip(params) {
            sums[a] += p;
            sizes[a] += 1;
        }
        let means = sums
            .iter()
            .zip(&sizes)
            .map(|(s, &n)| if n > 0 { s / n as f64 } else { 0.0 })
            .collect();
        Self::new(assignment, means)
    }

    /// Every parameter in its own cluster.
    pub fn singletons(params: &[f64]) -> Self {
        TyingPartition {
            assignment: (0..params.len()).collect(),
            means: params.to_vec(),
        }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn n_clusters(&self) -> usize {
        self.means.len()
    }

    pub fn n_params(&self) -> usize {
        self.assignment.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters()];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }

    /// Per-parameter values implied by `values` (one per cluster).
    pub fn expand(&self, values: &[f64]) -> Vec<f64> {
        self.assignment.iter().map(|&a| values[a]).collect()
    }

    /// `Σ_j (θ_j − μ_{a_j})²`.
    pub fn objective(&self, params: &[f64]) -> f64 {
        params
            .iter()
            .zip(&self.assignment)
            .map(|(p, &a)| (p - self.means[a]).powi(2))
            .sum()
    }

    pub(crate) fn with_means(&self, means: Vec<f64>) -> Self {
        TyingPartition {
            assignment: self.assignment.clone(),
            means,
        }
    }
}

/// Splits `params` into exactly `c` clusters minimizing the within-cluster
/// sum of squares. Optimal 1-D clusters are contiguous in sorted order, so a
/// dynamic program over sorted prefixes finds the exact optimum. Cluster ids
/// increase with value.
#[allow(clippy::needless_range_loop)]
pub fn quantize_params(params: &[f64], c: usize) -> Result<TyingPartition> {
    let n = params.len();
    if c < 1 || c > n {
        return Err(Error::ClusterCount {
            clusters: c,
            params: n,
        });
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Config("cannot cluster non-finite parameters".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| params[a].total_cmp(&params[b]).then(a.cmp(&b)));
    let shift = params.iter().sum::<f64>() / n as f64;
    let sorted: Vec<f64> = order.iter().map(|&k| params[k] - shift).collect();

    let mut prefix = vec![0.0; n + 1];
    let mut prefix_sq = vec![0.0; n + 1];
    for (k, v) in sorted.iter().enumerate() {
        prefix[k + 1] = prefix[k] + v;
        prefix_sq[k + 1] = prefix_sq[k] + v * v;
    }
    // sum of squares of sorted[from..to] about its mean
    let sse = |from: usize, to: usize| -> f64 {
        let len = (to - from) as f64;
        let s = prefix[to] - prefix[from];
        (prefix_sq[to] - prefix_sq[from] - s * s / len).max(0.0)
    };

    // cost[k][i]: best cost of splitting the first i values into k+1 groups;
    // start[k][i]: where the last of those groups begins.
    let mut cost = vec![vec![f64::INFINITY; n + 1]; c];
    let mut start = vec![vec![0usize; n + 1]; c];
    for i in 1..=n {
        cost[0][i] = sse(0, i);
    }
    for k in 1..c {
        for i in (k + 1)..=n {
            let mut best = f64::INFINITY;
            let mut best_j = k;
            for j in k..i {
                let v = cost[k - 1][j] + sse(j, i);
                if v < best {
                    best = v;
                    best_j = j;
                }
            }
            cost[k][i] = best;
            start[k][i] = best_j;
        }
    }

    let mut bounds = Vec::with_capacity(c + 1);
    let mut end = n;
    bounds.push(end);
    for k in (1..c).rev() {
        end = start[k][end];
        bounds.push(end);
    }
    bounds.push(0);
    bounds.reverse();

    let mut assignment = vec![0; n];
    for cluster in 0..c {
        for &k in &order[bounds[cluster]..bounds[cluster + 1]] {
            assignment[k] = cluster;
        }
    }
    TyingPartition::from_assignment(assignment, params)
}
