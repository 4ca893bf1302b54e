//! Independent reference implementations used by the integration tests.
//! Everything here is written directly from the definitions, with no shared
//! code paths with the library beyond the plain data types.

#![allow(dead_code)]

use forced_pruning::{DataSet, Edge, PairwiseModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn e(a: usize, b: usize) -> Edge {
    Edge::new(a, b).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rows with independent Bernoulli columns of varied bias plus a few copied
/// columns, so pairwise structure is non-trivial.
pub fn random_dataset(n_vars: usize, rows: usize, seed: u64) -> DataSet {
    let mut r = rng(seed);
    let bias: Vec<f64> = (0..n_vars).map(|_| r.gen_range(0.15..0.85)).collect();
    let parent: Vec<Option<usize>> = (0..n_vars)
        .map(|i| (i > 0 && r.gen_bool(0.6)).then(|| r.gen_range(0..i)))
        .collect();
    let flip: Vec<f64> = (0..n_vars).map(|_| r.gen_range(0.05..0.4)).collect();
    let data: Vec<Vec<u8>> = (0..rows)
        .map(|_| {
            let mut x = vec![0u8; n_vars];
            for i in 0..n_vars {
                x[i] = match parent[i] {
                    Some(p) if !r.gen_bool(flip[i]) => x[p],
                    Some(p) => 1 - x[p],
                    None => r.gen_bool(bias[i]) as u8,
                };
            }
            x
        })
        .collect();
    DataSet::new("random", n_vars, &data).unwrap()
}

/// Samples from a tree-structured distribution: each non-root variable copies
/// its parent with probability `keep`.
pub fn tree_samples(parents: &[Option<usize>], keep: f64, rows: usize, seed: u64) -> DataSet {
    let mut r = rng(seed);
    let n = parents.len();
    let data: Vec<Vec<u8>> = (0..rows)
        .map(|_| {
            let mut x = vec![0u8; n];
            for i in 0..n {
                x[i] = match parents[i] {
                    None => r.gen_bool(0.5) as u8,
                    Some(p) if r.gen_bool(keep) => x[p],
                    Some(p) => 1 - x[p],
                };
            }
            x
        })
        .collect();
    DataSet::new("tree", n, &data).unwrap()
}

pub fn random_model(n_vars: usize, edge_prob: f64, scale: f64, seed: u64) -> PairwiseModel {
    let mut r = rng(seed);
    let nodes: Vec<f64> = (0..n_vars).map(|_| r.gen_range(-scale..=scale)).collect();
    let mut edges = Vec::new();
    for e in Edge::complete(n_vars) {
        if r.gen_bool(edge_prob) {
            edges.push((e, r.gen_range(-scale..=scale)));
        }
    }
    PairwiseModel::from_parts(n_vars, nodes, edges).unwrap()
}

fn log_sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        -(-a).exp().ln_1p()
    } else {
        a - a.exp().ln_1p()
    }
}

/// Mean over instances of `Σ_i log P(x_i | x_-i)`, evaluated row by row.
pub fn pll_oracle(model: &PairwiseModel, ds: &DataSet) -> f64 {
    let n = model.n_vars();
    let mut total = 0.0;
    for x in ds.instances() {
        for i in 0..n {
            let mut a = model.node_weights()[i];
            for (edge, w) in model.weighted_edges() {
                let other = if edge.lo() == i {
                    edge.hi()
                } else if edge.hi() == i {
                    edge.lo()
                } else {
                    continue;
                };
                a += w * x[other] as f64;
            }
            let s = if x[i] == 1 { a } else { -a };
            total += log_sigmoid(s);
        }
    }
    total / ds.len() as f64
}

/// Central finite-difference gradient of `pll_oracle`.
pub fn fd_gradient(model: &PairwiseModel, ds: &DataSet, h: f64) -> Vec<f64> {
    let base = model.params();
    (0..base.len())
        .map(|j| {
            let mut m = model.clone();
            let mut p = base.clone();
            p[j] = base[j] + h;
            m.set_params(&p).unwrap();
            let up = pll_oracle(&m, ds);
            p[j] = base[j] - h;
            m.set_params(&p).unwrap();
            let down = pll_oracle(&m, ds);
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Empirical mutual information (nats) from raw instances.
pub fn mi_oracle(ds: &DataSet, i: usize, j: usize) -> f64 {
    let mut joint = [[0.0f64; 2]; 2];
    for x in ds.instances() {
        joint[x[i] as usize][x[j] as usize] += 1.0;
    }
    let n = ds.len() as f64;
    let pi = [
        (joint[0][0] + joint[0][1]) / n,
        (joint[1][0] + joint[1][1]) / n,
    ];
    let pj = [
        (joint[0][0] + joint[1][0]) / n,
        (joint[0][1] + joint[1][1]) / n,
    ];
    let mut mi = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let p = joint[a][b] / n;
            if p > 0.0 {
                mi += p * (p / (pi[a] * pj[b])).ln();
            }
        }
    }
    mi
}

fn is_spanning_tree(n: usize, edges: &[Edge]) -> bool {
    if edges.len() + 1 != n {
        return false;
    }
    let mut label: Vec<usize> = (0..n).collect();
    for e in edges {
        let (a, b) = (label[e.lo()], label[e.hi()]);
        if a == b {
            return false;
        }
        for l in label.iter_mut() {
            if *l == b {
                *l = a;
            }
        }
    }
    true
}

/// Every spanning tree of the complete graph on `n` vertices, by checking
/// all `(n-1)`-subsets of edges.
pub fn all_spanning_trees(n: usize) -> Vec<Vec<Edge>> {
    let all = Edge::complete(n);
    k_subsets(all.len(), n - 1)
        .into_iter()
        .map(|s| s.into_iter().map(|i| all[i]).collect::<Vec<_>>())
        .filter(|t| is_spanning_tree(n, t))
        .collect()
}

pub fn tree_weight(ds: &DataSet, tree: &[Edge]) -> f64 {
    tree.iter().map(|e| mi_oracle(ds, e.lo(), e.hi())).sum()
}

/// All `k`-element index subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum within-cluster squared error over every split of the sorted
/// values into exactly `c` non-empty contiguous runs.
pub fn best_contiguous_partition(values: &[f64], c: usize) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let sse = |run: &[f64]| {
        let mean = run.iter().sum::<f64>() / run.len() as f64;
        run.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
    };
    // cut positions are a (c-1)-subset of 1..n
    let mut best = f64::INFINITY;
    for cuts in k_subsets(n - 1, c - 1) {
        let mut bounds = vec![0];
        bounds.extend(cuts.iter().map(|&i| i + 1));
        bounds.push(n);
        let total: f64 = bounds.windows(2).map(|w| sse(&sorted[w[0]..w[1]])).sum();
        best = best.min(total);
    }
    best
}

/// Target distribution of the rejection sampler: every `k`-subset `S` of the
/// model's edges with weight `exp(pll(model without S))`, normalized.
pub fn subset_distribution(model: &PairwiseModel, ds: &DataSet, k: usize) -> Vec<(Vec<Edge>, f64)> {
    let edges = model.edges().to_vec();
    let mut out: Vec<(Vec<Edge>, f64)> = k_subsets(edges.len(), k)
        .into_iter()
        .map(|s| {
            let mut m = model.clone();
            let subset: Vec<Edge> = s.iter().map(|&i| edges[i]).collect();
            for e in &subset {
                m.remove_edge(*e).unwrap();
            }
            (subset, pll_oracle(&m, ds).exp())
        })
        .collect();
    let z: f64 = out.iter().map(|(_, w)| w).sum();
    for (_, w) in out.iter_mut() {
        *w /= z;
    }
    out
}

/// Total variation distance between an exact distribution and sample counts.
pub fn total_variation(
    exact: &[(Vec<Edge>, f64)],
    counts: &std::collections::HashMap<Vec<Edge>, usize>,
) -> f64 {
    let n: usize = counts.values().sum();
    let mut tv = 0.0;
    for (s, p) in exact {
        let q = counts.get(s).copied().unwrap_or(0) as f64 / n as f64;
        tv += (p - q).abs();
    }
    // mass on subsets outside the support
    let known: usize = exact
        .iter()
        .map(|(s, _)| counts.get(s).copied().unwrap_or(0))
        .sum();
    tv += (n - known) as f64 / n as f64;
    tv / 2.0
}

/// Probe grid maximum of a 1-D function on `[lo, hi]`, refined around the best point.
pub fn grid_argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (lo, hi);
    let mut best = (lo, f(lo));
    for _ in 0..8 {
        let steps = 200;
        let h = (hi - lo) / steps as f64;
        for s in 0..=steps {
            let x = lo + h * s as f64;
            let v = f(x);
            if v > best.1 {
                best = (x, v);
            }
        }
        lo = best.0 - 2.0 * h;
        hi = best.0 + 2.0 * h;
    }
    best
}

/// Exact samples from the joint distribution `∝ exp(θ·x + Σ θ_e x_i x_j)`,
/// by enumerating all `2^n` states (small `n` only).
pub fn exact_samples(model: &PairwiseModel, rows: usize, seed: u64) -> DataSet {
    let n = model.n_vars();
    let states: Vec<Vec<u8>> = (0..1u32 << n)
        .map(|s| (0..n).map(|i| ((s >> i) & 1) as u8).collect())
        .collect();
    let energy = |x: &[u8]| {
        let mut v: f64 = (0..n).map(|i| model.node_weights()[i] * x[i] as f64).sum();
        for (edge, w) in model.weighted_edges() {
            v += w * (x[edge.lo()] * x[edge.hi()]) as f64;
        }
        v
    };
    let weights: Vec<f64> = states.iter().map(|x| energy(x).exp()).collect();
    let dist = rand::distributions::WeightedIndex::new(&weights).unwrap();
    let mut r = rng(seed);
    let data: Vec<Vec<u8>> = (0..rows)
        .map(|_| states[rand::distributions::Distribution::sample(&dist, &mut r)].clone())
        .collect();
    DataSet::new("exact", n, &data).unwrap()
}
