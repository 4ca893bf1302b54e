//! The forced-pruning learner.
//!
//! The active edge set is seeded with a Chow-Liu tree plus `m` random extra
//! edges, so it always holds exactly `M = n_vars − 1 + m` edges. Each
//! iteration fits parameters with tying, deletes `k` edges (greedily or by
//! rejection sampling), and adds the `k` inactive edges with the largest
//! single-edge PLL gain.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chowliu::chow_liu_tree;
use crate::dataset::DataSet;
use crate::error::{Error, Result};
use crate::model::{Edge, Fields, PairwiseModel};
use crate::param_learn::{
    learn_params_with_apt, AptFit, FitOptions, TyingPartition, DEFAULT_APT_CLUSTERS,
};

/// Bracket width for the 1-D weight search when scoring an edge addition.
pub const ADD_WEIGHT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Heuristic {
    Greedy,
    Rejection,
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Heuristic::Greedy => "greedy",
            Heuristic::Rejection => "rejection",
        })
    }
}

impl FromStr for Heuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "greedy" => Ok(Heuristic::Greedy),
            "rejection" => Ok(Heuristic::Rejection),
            other => Err(Error::Config(format!(
                "unknown heuristic {:?} (expected greedy or rejection)",
                other
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PruningConfig {
    /// Edges added on top of the Chow-Liu tree.
    pub extra_edges: usize,
    /// Edges exchanged per iteration.
    pub exchange_size: usize,
    pub heuristic: Heuristic,
    pub max_iter: usize,
    pub seed: u64,
    pub apt_clusters: usize,
    pub fit: FitOptions,
    /// Proposals per rejection-sampling call before falling back to greedy.
    pub rejection_cap: usize,
}

impl Default for PruningConfig {
    fn default() -> Self {
        PruningConfig {
            extra_edges: 0,
            exchange_size: 0,
            heuristic: Heuristic::Greedy,
            max_iter: 30,
            seed: 0,
            apt_clusters: DEFAULT_APT_CLUSTERS,
            fit: FitOptions::default(),
            rejection_cap: 10_000,
        }
    }
}

impl PruningConfig {
    /// The edge budget `M`.
    pub fn budget(&self, n_vars: usize) -> usize {
        n_vars.saturating_sub(1) + self.extra_edges
    }

    /// Checks the configuration against a variable count and returns `M`.
    pub fn validate(&self, n_vars: usize) -> Result<usize> {
        self.fit.validate()?;
        if n_vars < 2 {
            return Err(Error::Config(format!(
                "need at least 2 variables, got {}",
                n_vars
            )));
        }
        let total = n_vars * (n_vars - 1) / 2;
        let budget = self.budget(n_vars);
        if budget > total {
            return Err(Error::Config(format!(
                "edge budget {} (tree {} + extra {}) exceeds the {} possible edges",
                budget,
                n_vars - 1,
                self.extra_edges,
                total
            )));
        }
        if self.exchange_size > budget {
            return Err(Error::Config(format!(
                "exchange size {} exceeds the edge budget {}",
                self.exchange_size, budget
            )));
        }
        if self.exchange_size > total - budget {
            return Err(Error::Config(format!(
                "exchange size {} exceeds the {} inactive edges available for addition",
                self.exchange_size,
                total - budget
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if self.apt_clusters < 1 {
            return Err(Error::Config("apt_clusters must be at least 1".into()));
        }
        if self.rejection_cap < 1 {
            return Err(Error::Config("rejection cap must be at least 1".into()));
        }
        Ok(budget)
    }
}

/// PLL lost by removing one edge at fixed weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeScore {
    pub edge: Edge,
    pub delta: f64,
}

/// Deletion deltas of every active edge, worst (smallest) first.
pub fn edge_deletion_scores(model: &PairwiseModel, ds: &DataSet) -> Result<Vec<EdgeScore>> {
    if ds.n_vars() != model.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: model.n_vars(),
            found: ds.n_vars(),
        });
    }
    let fields = Fields::new(model, ds);
    let mut scores: Vec<EdgeScore> = model
        .weighted_edges()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(edge, w)| EdgeScore {
            edge,
            delta: fields.delta_without(&[(edge, w)]),
        })
        .collect();
    scores.sort_by(|a, b| a.delta.total_cmp(&b.delta).then(a.edge.cmp(&b.edge)));
    Ok(scores)
}

/// The `k` edges whose removal costs the least PLL.
pub fn greedy_delete(model: &PairwiseModel, ds: &DataSet, k: usize) -> Result<Vec<Edge>> {
    if k > model.n_edges() {
        return Err(Error::TooManyEdges {
            requested: k,
            available: model.n_edges(),
        });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut chosen: Vec<Edge> = edge_deletion_scores(model, ds)?
        .into_iter()
        .take(k)
        .map(|s| s.edge)
        .collect();
    chosen.sort();
    Ok(chosen)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RejectionDraw {
    /// Selected edges in canonical order.
    pub edges: Vec<Edge>,
    /// Proposals made, including the accepted one.
    pub proposals: usize,
    /// True when no proposal was accepted within the cap and the greedy
    /// choice was returned instead.
    pub fell_back: bool,
}

/// Samples a `k`-subset `S` of active edges with probability proportional to
/// `exp(pll(model with S removed))`.
///
/// Proposals are uniform over `k`-subsets and accepted when
/// `u ≤ exp(pll_after)`, `u ~ U(0, 1)`. The envelope constant is 1: the mean
/// per-instance PLL is a log-probability, so its exponential never exceeds 1.
pub fn rejection_sample_delete<R: Rng + ?Sized>(
    model: &PairwiseModel,
    ds: &DataSet,
    k: usize,
    rng: &mut R,
    cap: usize,
) -> Result<RejectionDraw> {
    if cap < 1 {
        return Err(Error::Config("rejection cap must be at least 1".into()));
    }
    if k > model.n_edges() {
        return Err(Error::TooManyEdges {
            requested: k,
            available: model.n_edges(),
        });
    }
    if k == 0 {
        return Ok(RejectionDraw {
            edges: Vec::new(),
            proposals: 0,
            fell_back: false,
        });
    }
    if ds.n_vars() != model.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: model.n_vars(),
            found: ds.n_vars(),
        });
    }

    let fields = Fields::new(model, ds);
    let base = fields.pll();
    let mut pool: Vec<(Edge, f64)> = model.weighted_edges().collect();
    for proposal in 1..=cap {
        let (subset, _) = pool.partial_shuffle(rng, k);
        let after = base - fields.delta_without(subset);
        let u: f64 = rng.gen();
        if u <= after.exp() {
            let mut edges: Vec<Edge> = subset.iter().map(|(e, _)| *e).collect();
            edges.sort();
            return Ok(RejectionDraw {
                edges,
                proposals: proposal,
                fell_back: false,
            });
        }
    }
    Ok(RejectionDraw {
        edges: greedy_delete(model, ds, k)?,
        proposals: cap,
        fell_back: true,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeGain {
    pub edge: Edge,
    /// Maximizing weight with every other weight frozen.
    pub weight: f64,
    pub gain: f64,
}

/// Scores every candidate by its best single-edge PLL gain and returns the
/// top `k`, largest gain first (ties by edge order).
pub fn greedy_add(
    model: &PairwiseModel,
    ds: &DataSet,
    candidates: &[Edge],
    k: usize,
) -> Result<Vec<EdgeGain>> {
    if k > candidates.len() {
        return Err(Error::TooManyEdges {
            requested: k,
            available: candidates.len(),
        });
    }
    if ds.n_vars() != model.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: model.n_vars(),
            found: ds.n_vars(),
        });
    }
    if let Some(e) = candidates.iter().find(|e| model.edge_index(**e).is_some()) {
        return Err(Error::EdgeAlreadyActive {
            lo: e.lo(),
            hi: e.hi(),
        });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let fields = Fields::new(model, ds);
    let mut gains: Vec<EdgeGain> = candidates
        .par_iter()
        .map(|&edge| {
            let (weight, gain) = fields.add_gain(edge, ADD_WEIGHT_TOLERANCE);
            EdgeGain { edge, weight, gain }
        })
        .collect();
    gains.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.edge.cmp(&b.edge)));
    gains.truncate(k);
    Ok(gains)
}

/// What happened in one iteration of the learner.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Training negative PLL of the model fitted at the start of the iteration.
    pub train_neg_pll: f64,
    pub fit_converged: bool,
    pub deleted: Vec<Edge>,
    pub added: Vec<Edge>,
    /// Rejection proposals made (0 under the greedy heuristic).
    pub proposals: usize,
    pub fell_back: bool,
}

#[derive(Clone, Debug)]
pub struct PruningOutcome {
    /// The fitted model with the lowest training negative PLL seen.
    pub model: PairwiseModel,
    pub partition: TyingPartition,
    pub train_neg_pll: f64,
    /// Index into `log` of the returned model.
    pub best_iteration: usize,
    pub log: Vec<IterationRecord>,
}

/// Step-wise driver; [`forced_pruning`] runs it to completion.
pub struct ForcedPruning<'a> {
    train: &'a DataSet,
    config: PruningConfig,
    rng: ChaCha8Rng,
    active: BTreeSet<Edge>,
    pool: BTreeSet<Edge>,
    /// Warm start for the next fit, over exactly the active edges.
    current: PairwiseModel,
    /// Whether the active set changed since the last fit.
    dirty: bool,
    best: Option<(f64, usize, AptFit)>,
    log: Vec<IterationRecord>,
}

impl<'a> ForcedPruning<'a> {
    pub fn new(train: &'a DataSet, config: PruningConfig) -> Result<Self> {
        let budget = config.validate(train.n_vars())?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

        let mut active: BTreeSet<Edge> = chow_liu_tree(train).into_iter().collect();
        let mut remaining: Vec<Edge> = Edge::complete(train.n_vars())
            .into_iter()
            .filter(|e| !active.contains(e))
            .collect();
        let extra = budget - active.len();
        let mut picked = index::sample(&mut rng, remaining.len(), extra).into_vec();
        picked.sort_unstable();
        for &k in picked.iter().rev() {
            active.insert(remaining.swap_remove(k));
        }
        let pool: BTreeSet<Edge> = remaining.into_iter().collect();

        let current = PairwiseModel::with_edges(train.n_vars(), active.iter().copied())?;
        Ok(ForcedPruning {
            train,
            config,
            rng,
            active,
            pool,
            current,
            dirty: true,
            best: None,
            log: Vec::new(),
        })
    }

    pub fn active(&self) -> &BTreeSet<Edge> {
        &self.active
    }

    pub fn pool(&self) -> &BTreeSet<Edge> {
        &self.pool
    }

    pub fn log(&self) -> &[IterationRecord] {
        &self.log
    }

    fn fit_current(&mut self) -> Result<AptFit> {
        let fit = learn_params_with_apt(
            &self.current,
            self.train,
            self.config.apt_clusters,
            &self.config.fit,
        )?;
        if !fit.model.is_finite() {
            return Err(Error::NonFinite {
                step: fit.report.steps,
            });
        }
        self.dirty = false;
        Ok(fit)
    }

    fn consider(&mut self, neg_pll: f64, fit: &AptFit) {
        let iteration = self.log.len();
        if self.best.as_ref().is_none_or(|(b, _, _)| neg_pll < *b) {
            self.best = Some((neg_pll, iteration, fit.clone()));
        }
    }

    /// One fit-delete-add exchange.
    pub fn step(&mut self) -> Result<&IterationRecord> {
        let fit = self.fit_current()?;
        let neg_pll = -fit.model.pll(self.train)?;
        self.consider(neg_pll, &fit);

        let k = self.config.exchange_size;
        let (deleted, proposals, fell_back) = match self.config.heuristic {
            _ if k == 0 => (Vec::new(), 0, false),
            Heuristic::Greedy => (greedy_delete(&fit.model, self.train, k)?, 0, false),
            Heuristic::Rejection => {
                let draw = rejection_sample_delete(
                    &fit.model,
                    self.train,
                    k,
                    &mut self.rng,
                    self.config.rejection_cap,
                )?;
                (draw.edges, draw.proposals, draw.fell_back)
            }
        };
        let candidates: Vec<Edge> = self.pool.iter().copied().collect();
        let added: Vec<Edge> = greedy_add(&fit.model, self.train, &candidates, k)?
            .into_iter()
            .map(|g| g.edge)
            .collect();

        let mut next = fit.model.clone();
        for e in &deleted {
            next.remove_edge(*e)?;
            self.active.remove(e);
        }
        for e in &added {
            next.insert_edge(*e, 0.0)?;
            self.pool.remove(e);
            self.active.insert(*e);
        }
        self.pool.extend(deleted.iter().copied());
        self.dirty = k > 0;
        self.current = next;

        self.log.push(IterationRecord {
            iteration: self.log.len(),
            train_neg_pll: neg_pll,
            fit_converged: fit.report.converged,
            deleted,
            added,
            proposals,
            fell_back,
        });
        Ok(self.log.last().expect("just pushed"))
    }

    /// Fits the final structure if it changed since the last fit and returns
    /// the best model seen.
    pub fn finish(mut self) -> Result<PruningOutcome> {
        if self.dirty {
            let fit = self.fit_current()?;
            let neg_pll = -fit.model.pll(self.train)?;
            self.consider(neg_pll, &fit);
            self.log.push(IterationRecord {
                iteration: self.log.len(),
                train_neg_pll: neg_pll,
                fit_converged: fit.report.converged,
                deleted: Vec::new(),
                added: Vec::new(),
                proposals: 0,
                fell_back: false,
            });
        }
        let (train_neg_pll, best_iteration, fit) = self.best.expect("at least one fit");
        Ok(PruningOutcome {
            model: fit.model,
            partition: fit.partition,
            train_neg_pll,
            best_iteration,
            log: self.log,
        })
    }
}

/// Runs `max_iter` exchanges (a single fit when `k = 0`, since the structure
/// cannot change).
pub fn forced_pruning(train: &DataSet, config: &PruningConfig) -> Result<PruningOutcome> {
    let mut learner = ForcedPruning::new(train, config.clone())?;
    let iterations = if config.exchange_size == 0 {
        1
    } else {
        config.max_iter
    };
    for _ in 0..iterations {
        learner.step()?;
    }
    learner.finish()
}
