//! Binary pairwise Markov networks in log-linear (Ising-style) form.
//!
//! The unnormalized log-density of an assignment `x ∈ {0,1}^n` is
//! `Σ_i θ_i x_i + Σ_(i,j) θ_ij x_i x_j`. Nothing here ever touches the
//! partition function: every score goes through the per-variable
//! conditionals, which are logistic in the local field of the variable.

use std::fmt;

use crate::dataset::DataSet;
use crate::error::{Error, Result};

/// An unordered variable pair, stored with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    lo: usize,
    hi: usize,
}

impl Edge {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Edge { lo: a, hi: b }),
            std::cmp::Ordering::Greater => Ok(Edge { lo: b, hi: a }),
            std::cmp::Ordering::Equal => Err(Error::SelfLoop(a)),
        }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn contains(&self, v: usize) -> bool {
        self.lo == v || self.hi == v
    }

    /// All `n(n-1)/2` edges of the complete graph in lexicographic order.
    pub fn complete(n_vars: usize) -> Vec<Edge> {
        let mut out = Vec::with_capacity(n_vars * n_vars.saturating_sub(1) / 2);
        for lo in 0..n_vars {
            for hi in (lo + 1)..n_vars {
                out.push(Edge { lo, hi });
            }
        }
        out
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseModel {
    n_vars: usize,
    node_weights: Vec<f64>,
    edges: Vec<Edge>,
    edge_weights: Vec<f64>,
}

impl PairwiseModel {
    /// Model with no edges and all node weights zero.
    pub fn new(n_vars: usize) -> Self {
        PairwiseModel {
            n_vars,
            node_weights: vec![0.0; n_vars],
            edges: Vec::new(),
            edge_weights: Vec::new(),
        }
    }

    /// Zero-weight model over the given edge set.
    pub fn with_edges(n_vars: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let edges: Vec<(Edge, f64)> = edges.into_iter().map(|e| (e, 0.0)).collect();
        Self::from_parts(n_vars, vec![0.0; n_vars], edges)
    }

    pub fn from_parts(
        n_vars: usize,
        node_weights: Vec<f64>,
        mut edges: Vec<(Edge, f64)>,
    ) -> Result<Self> {
        if node_weights.len() != n_vars {
            return Err(Error::DimensionMismatch {
                expected: n_vars,
                found: node_weights.len(),
            });
        }
        edges.sort_by_key(|a| a.0);
        for pair in edges.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::EdgeAlreadyActive {
                    lo: pair[0].0.lo,
                    hi: pair[0].0.hi,
                });
            }
        }
        if let Some((e, _)) = edges.iter().find(|(e, _)| e.hi >= n_vars) {
            return Err(Error::IndexOutOfRange {
                index: e.hi,
                n_vars,
            });
        }
        let (edges, edge_weights) = edges.into_iter().unzip();
        Ok(PairwiseModel {
            n_vars,
            node_weights,
            edges,
            edge_weights,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weights
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges paired with their weights, in canonical order.
    pub fn weighted_edges(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.edges
            .iter()
            .copied()
            .zip(self.edge_weights.iter().copied())
    }

    pub fn edge_index(&self, e: Edge) -> Option<usize> {
        self.edges.binary_search(&e).ok()
    }

    pub fn edge_weight(&self, e: Edge) -> Option<f64> {
        self.edge_index(e).map(|k| self.edge_weights[k])
    }

    pub fn set_node_weight(&mut self, i: usize, w: f64) {
        self.node_weights[i] = w;
    }

    pub fn set_edge_weight(&mut self, e: Edge, w: f64) -> Result<()> {
        let k = self
            .edge_index(e)
            .ok_or(Error::EdgeNotActive { lo: e.lo, hi: e.hi })?;
        self.edge_weights[k] = w;
        Ok(())
    }

    pub fn insert_edge(&mut self, e: Edge, w: f64) -> Result<()> {
        if e.hi >= self.n_vars {
            return Err(Error::IndexOutOfRange {
                index: e.hi,
                n_vars: self.n_vars,
            });
        }
        match self.edges.binary_search(&e) {
            Ok(_) => Err(Error::EdgeAlreadyActive { lo: e.lo, hi: e.hi }),
            Err(pos) => {
                self.edges.insert(pos, e);
                self.edge_weights.insert(pos, w);
                Ok(())
            }
        }
    }

    /// Removes an edge and returns its weight.
    pub fn remove_edge(&mut self, e: Edge) -> Result<f64> {
        let k = self
            .edge_index(e)
            .ok_or(Error::EdgeNotActive { lo: e.lo, hi: e.hi })?;
        self.edges.remove(k);
        Ok(self.edge_weights.remove(k))
    }

    /// Node weights followed by edge weights.
    pub fn n_params(&self) -> usize {
        self.n_vars + self.edges.len()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.node_weights.clone();
        p.extend_from_slice(&self.edge_weights);
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                found: params.len(),
            });
        }
        let (nodes, edges) = params.split_at(self.n_vars);
        self.node_weights.copy_from_slice(nodes);
        self.edge_weights.copy_from_slice(edges);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.node_weights
            .iter()
            .chain(&self.edge_weights)
            .all(|w| w.is_finite())
    }

    fn check_data(&self, ds: &DataSet) -> Result<()> {
        if ds.n_vars() != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                found: ds.n_vars(),
            });
        }
        Ok(())
    }

    /// Fills `out` with the local field `θ_i + Σ_j θ_ij x_j` of every variable.
    pub(crate) fn fields_into(&self, x: &[u8], out: &mut [f64]) {
        out.copy_from_slice(&self.node_weights);
        for (e, &w) in self.edges.iter().zip(&self.edge_weights) {
            if x[e.hi] == 1 {
                out[e.lo] += w;
            }
            if x[e.lo] == 1 {
                out[e.hi] += w;
            }
        }
    }

    /// `P(X_i = 1 | x_{-i})`.
    pub fn conditional_prob(&self, x: &[u8], i: usize) -> Result<f64> {
        if x.len() != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                found: x.len(),
            });
        }
        if i >= self.n_vars {
            return Err(Error::IndexOutOfRange {
                index: i,
                n_vars: self.n_vars,
            });
        }
        let mut field = self.node_weights[i];
        for (e, &w) in self.edges.iter().zip(&self.edge_weights) {
            if (e.lo == i && x[e.hi] == 1) || (e.hi == i && x[e.lo] == 1) {
                field += w;
            }
        }
        Ok(sigmoid(field))
    }

    /// Mean per-instance pseudo-log-likelihood in nats.
    pub fn pll(&self, ds: &DataSet) -> Result<f64> {
        self.check_data(ds)?;
        let mut field = vec![0.0; self.n_vars];
        let mut total = 0.0;
        for (x, count) in ds.patterns() {
            self.fields_into(x, &mut field);
            let row: f64 = x.iter().zip(&field).map(|(&xi, &a)| log_cond(xi, a)).sum();
            total += count as f64 * row;
        }
        Ok(total / ds.len() as f64)
    }

    /// Gradient of [`pll`](Self::pll) over node weights then edge weights.
    pub fn pll_gradient(&self, ds: &DataSet) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.n_params()];
        self.pll_with_gradient(ds, &mut grad)?;
        Ok(grad)
    }

    /// PLL and its gradient from one pass over the data.
    pub fn pll_with_gradient(&self, ds: &DataSet, grad: &mut [f64]) -> Result<f64> {
        self.check_data(ds)?;
        if grad.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                found: grad.len(),
            });
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let n = self.n_vars;
        let mut field = vec![0.0; n];
        let mut resid = vec![0.0; n];
        let mut total = 0.0;
        for (x, count) in ds.patterns() {
            let c = count as f64;
            self.fields_into(x, &mut field);
            let mut row = 0.0;
            for i in 0..n {
                row += log_cond(x[i], field[i]);
                resid[i] = x[i] as f64 - sigmoid(field[i]);
                grad[i] += c * resid[i];
            }
            total += c * row;
            for (k, e) in self.edges.iter().enumerate() {
                let g = x[e.hi] as f64 * resid[e.lo] + x[e.lo] as f64 * resid[e.hi];
                grad[n + k] += c * g;
            }
        }
        let inv = 1.0 / ds.len() as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        Ok(total * inv)
    }

    /// `pll(self) - pll(self with θ_e = 0)`.
    pub fn pll_delta_without_edge(&self, ds: &DataSet, e: Edge) -> Result<f64> {
        self.check_data(ds)?;
        let w = self
            .edge_weight(e)
            .ok_or(Error::EdgeNotActive { lo: e.lo, hi: e.hi })?;
        let fields = Fields::new(self, ds);
        Ok(fields.delta_without(&[(e, w)]))
    }
}

/// Local fields of every variable at every distinct data row, cached for
/// repeated incremental scoring of edge removals and additions.
pub(crate) struct Fields<'a> {
    ds: &'a DataSet,
    n_vars: usize,
    values: Vec<f64>,
}

impl<'a> Fields<'a> {
    pub(crate) fn new(model: &PairwiseModel, ds: &'a DataSet) -> Self {
        let n = model.n_vars;
        let mut values = vec![0.0; n * ds.n_patterns()];
        for ((x, _), out) in ds.patterns().zip(values.chunks_exact_mut(n)) {
            model.fields_into(x, out);
        }
        Fields {
            ds,
            n_vars: n,
            values,
        }
    }

    fn rows(&self) -> impl Iterator<Item = (&'a [u8], f64, &[f64])> + '_ {
        self.ds
            .patterns()
            .zip(self.values.chunks_exact(self.n_vars))
            .map(|((x, c), a)| (x, c as f64, a))
    }

    pub(crate) fn pll(&self) -> f64 {
        let total: f64 = self
            .rows()
            .map(|(x, c, a)| {
                c * x
                    .iter()
                    .zip(a)
                    .map(|(&xi, &ai)| log_cond(xi, ai))
                    .sum::<f64>()
            })
            .sum();
        total / self.ds.len() as f64
    }

    /// PLL lost by zeroing all of `removed` at once. Only the conditionals of
    /// the endpoints change.
    pub(crate) fn delta_without(&self, removed: &[(Edge, f64)]) -> f64 {
        let mut touched: Vec<usize> = removed.iter().flat_map(|(e, _)| [e.lo, e.hi]).collect();
        touched.sort_unstable();
        touched.dedup();

        let mut total = 0.0;
        for (x, c, a) in self.rows() {
            let mut row = 0.0;
            for &v in &touched {
                let mut shifted = a[v];
                for &(e, w) in removed {
                    if (e.lo == v && x[e.hi] == 1) || (e.hi == v && x[e.lo] == 1) {
                        shifted -= w;
                    }
                }
                row += log_cond(x[v], a[v]) - log_cond(x[v], shifted);
            }
            total += c * row;
        }
        total / self.ds.len() as f64
    }

    /// Best weight for a new edge `e` with every other weight frozen, and the
    /// PLL gain it yields. The gain is concave in the weight, so a bracketed
    /// Newton search on its derivative finds the maximizer.
    pub(crate) fn add_gain(&self, e: Edge, tolerance: f64) -> (f64, f64) {
        let mut terms: Vec<(f64, u8, f64)> = Vec::new();
        for (x, c, a) in self.rows() {
            if x[e.hi] == 1 {
                terms.push((c, x[e.lo], a[e.lo]));
            }
            if x[e.lo] == 1 {
                terms.push((c, x[e.hi], a[e.hi]));
            }
        }
        let inv_n = 1.0 / self.ds.len() as f64;
        let slope_curv = |w: f64| {
            let mut d1 = 0.0;
            let mut d2 = 0.0;
            for &(c, x, a) in &terms {
                let p = sigmoid(a + w);
                d1 += c * (x as f64 - p);
                d2 += c * p * (1.0 - p);
            }
            (d1 * inv_n, d2 * inv_n)
        };
        let gain_at = |w: f64| {
            let g: f64 = terms
                .iter()
                .map(|&(c, x, a)| c * (log_cond(x, a + w) - log_cond(x, a)))
                .sum();
            g * inv_n
        };

        let (d0, _) = slope_curv(0.0);
        if d0 == 0.0 || terms.is_empty() {
            return (0.0, 0.0);
        }
        let dir = d0.signum();

        // Bracket the root of the derivative along `dir`.
        let mut lo = 0.0;
        let mut hi = 1.0;
        while hi < MAX_ADDED_WEIGHT && slope_curv(dir * hi).0 * dir > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        let hi_slope = slope_curv(dir * hi).0 * dir;
        let w = if hi_slope > 0.0 {
            dir * hi
        } else {
            let mut t = 0.5 * (lo + hi);
            for _ in 0..200 {
                let (d1, d2) = slope_curv(dir * t);
                let d1 = d1 * dir;
                if d1 > 0.0 {
                    lo = t;
                } else {
                    hi = t;
                }
                if d1.abs() < 1e-14 || hi - lo < tolerance {
                    break;
                }
                let newton = t + d1 / d2;
                let next = if d2 > 0.0 && newton > lo && newton < hi {
                    newton
                } else {
                    0.5 * (lo + hi)
                };
                let moved = (next - t).abs();
                t = next;
                if moved < tolerance * 1e-3 {
                    break;
                }
            }
            dir * t
        };
        (w, gain_at(w).max(0.0))
    }
}

/// Largest magnitude tried for a newly added edge weight.
const MAX_ADDED_WEIGHT: f64 = 32.0;

pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `log P(X = x)` for a variable with local field `a`.
#[inline]
pub(crate) fn log_cond(x: u8, a: f64) -> f64 {
    if x == 1 {
        -softplus(-a)
    } else {
        -softplus(a)
    }
}
