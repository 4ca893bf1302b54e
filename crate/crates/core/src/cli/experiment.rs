//! Single runs and (m, k) grid sweeps over one dataset.

use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::dataset::DataSet;
use crate::error::{Error, Result};
use crate::structure::{forced_pruning, Heuristic, PruningConfig, PruningOutcome};

use super::report::{CellResult, ExperimentReport, SplitScores};

/// Cluster counts tried when selecting on the validation split.
pub const CLUSTER_CHOICES: [usize; 4] = [4, 8, 16, 32];

pub struct Splits {
    pub train: DataSet,
    pub valid: Option<DataSet>,
    pub test: Option<DataSet>,
}

impl Splits {
    pub fn new(train: DataSet, valid: Option<DataSet>, test: Option<DataSet>) -> Result<Self> {
        for ds in valid.iter().chain(test.iter()) {
            if ds.n_vars() != train.n_vars() {
                return Err(Error::Config(format!(
                    "{} has {} variables but the training set has {}",
                    ds.name(),
                    ds.n_vars(),
                    train.n_vars()
                )));
            }
        }
        Ok(Splits { train, valid, test })
    }

    pub fn name(&self) -> &str {
        self.train.name()
    }

    pub fn score(&self, outcome: &PruningOutcome) -> Result<SplitScores> {
        let neg = |ds: &DataSet| outcome.model.pll(ds).map(|p| -p);
        Ok(SplitScores {
            train: neg(&self.train)?,
            valid: self.valid.as_ref().map(neg).transpose()?,
            test: self.test.as_ref().map(neg).transpose()?,
        })
    }
}

pub struct RunRecord {
    pub outcome: PruningOutcome,
    pub scores: SplitScores,
    pub apt_clusters: usize,
    pub seconds: f64,
}

/// One learner run. With `select_clusters`, every count in
/// [`CLUSTER_CHOICES`] is tried and the lowest validation negative PLL wins
/// (ties go to the smaller count).
pub fn run_single(
    splits: &Splits,
    config: &PruningConfig,
    select_clusters: bool,
) -> Result<RunRecord> {
    let start = Instant::now();
    let (outcome, clusters) = if select_clusters {
        let valid = splits
            .valid
            .as_ref()
            .ok_or_else(|| Error::Config("cluster selection needs a validation split".into()))?;
        let mut best: Option<(f64, usize, PruningOutcome)> = None;
        for c in CLUSTER_CHOICES {
            let cfg = PruningConfig {
                apt_clusters: c,
                ..config.clone()
            };
            let out = forced_pruning(&splits.train, &cfg)?;
            let score = -out.model.pll(valid)?;
            if best.as_ref().is_none_or(|(b, _, _)| score < *b) {
                best = Some((score, c, out));
            }
        }
        let (_, c, out) = best.expect("non-empty choice list");
        (out, c)
    } else {
        (forced_pruning(&splits.train, config)?, config.apt_clusters)
    };
    let scores = splits.score(&outcome)?;
    Ok(RunRecord {
        outcome,
        scores,
        apt_clusters: clusters,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Grid of `(heuristic, m, k)` cells, parsed from `"m=0,15,30;k=0,5,10"`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepSpec {
    pub heuristics: Vec<Heuristic>,
    pub extra_edges: Vec<usize>,
    pub exchange_sizes: Vec<usize>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            heuristics: vec![Heuristic::Greedy],
            extra_edges: vec![0, 15, 30, 45, 60],
            exchange_sizes: vec![0, 5, 10],
        }
    }
}

impl FromStr for SweepSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = SweepSpec::default();
        let list = |key: &str, values: &str| -> Result<Vec<usize>> {
            let parsed = values
                .split(',')
                .map(|v| v.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Config(format!("invalid {} list {:?}", key, values)))?;
            if parsed.is_empty() {
                return Err(Error::Config(format!("empty {} list", key)));
            }
            Ok(parsed)
        };
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=values, got {:?}", part)))?;
            match key.trim() {
                "m" => spec.extra_edges = list("m", values)?,
                "k" => spec.exchange_sizes = list("k", values)?,
                "h" | "heuristic" => {
                    spec.heuristics = values
                        .split(',')
                        .map(str::parse)
                        .collect::<Result<Vec<_>>>()?
                }
                other => return Err(Error::Config(format!("unknown grid key {:?}", other))),
            }
        }
        Ok(spec)
    }
}

impl SweepSpec {
    /// Cells in heuristic-major, then m, then k order. A cell's seed is the
    /// base seed plus its position in this list.
    pub fn cells(&self) -> Vec<(Heuristic, usize, usize)> {
        let mut out = Vec::new();
        for &h in &self.heuristics {
            for &m in &self.extra_edges {
                for &k in &self.exchange_sizes {
                    out.push((h, m, k));
                }
            }
        }
        out
    }
}

/// Runs every cell (up to `jobs` at a time). Failing cells are recorded in
/// the report and do not stop the sweep. Returned outcomes align with the
/// report's cells.
pub fn run_sweep(
    splits: &Splits,
    base: &PruningConfig,
    spec: &SweepSpec,
    jobs: usize,
    select_clusters: bool,
) -> Result<(ExperimentReport, Vec<Option<PruningOutcome>>)> {
    let cells = spec.cells();
    if cells.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let run_cell = |(idx, &(heuristic, m, k)): (usize, &(Heuristic, usize, usize))| {
        let config = PruningConfig {
            heuristic,
            extra_edges: m,
            exchange_size: k,
            seed: base.seed.wrapping_add(idx as u64),
            ..base.clone()
        };
        let start = Instant::now();
        let result = run_single(splits, &config, select_clusters);
        let seconds = start.elapsed().as_secs_f64();
        match result {
            Ok(rec) => (
                CellResult {
                    heuristic,
                    extra_edges: m,
                    exchange_size: k,
                    seed: config.seed,
                    apt_clusters: rec.apt_clusters,
                    outcome: Ok(rec.scores),
                    seconds,
                },
                Some(rec.outcome),
            ),
            Err(e) => (
                CellResult {
                    heuristic,
                    extra_edges: m,
                    exchange_size: k,
                    seed: config.seed,
                    apt_clusters: config.apt_clusters,
                    outcome: Err(e.to_string()),
                    seconds,
                },
                None,
            ),
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {}", e)))?;
    let mut results: Vec<(CellResult, Option<PruningOutcome>)> =
        pool.install(|| cells.par_iter().enumerate().map(run_cell).collect());
    results.sort_by_key(|(c, _)| (c.heuristic, c.extra_edges, c.exchange_size));

    let (cells, outcomes): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let report = ExperimentReport {
        dataset: splits.name().to_string(),
        seed: base.seed,
        l2_strength: base.fit.l2_strength,
        apt_clusters: base.apt_clusters,
        max_iter: base.max_iter,
        cells,
    };
    Ok((report, outcomes))
}

/// Iteration log as CSV: one row per fitted structure.
pub fn iteration_log_csv(outcome: &PruningOutcome) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "iteration",
        "train_neg_pll",
        "fit_converged",
        "deleted",
        "added",
        "proposals",
        "fell_back",
        "best",
    ])
    .expect("in-memory write");
    let edges = |v: &[crate::model::Edge]| {
        v.iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    for rec in &outcome.log {
        w.write_record([
            rec.iteration.to_string(),
            rec.train_neg_pll.to_string(),
            rec.fit_converged.to_string(),
            edges(&rec.deleted),
            edges(&rec.added),
            rec.proposals.to_string(),
            rec.fell_back.to_string(),
            (rec.iteration == outcome.best_iteration).to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let s: SweepSpec = "m=0,15,30,45,60;k=0,5,10".parse().unwrap();
        assert_eq!(s.extra_edges, vec![0, 15, 30, 45, 60]);
        assert_eq!(s.exchange_sizes, vec![0, 5, 10]);
        assert_eq!(s.cells().len(), 15);
        let s: SweepSpec = "m=0;k=0;h=greedy,rejection".parse().unwrap();
        assert_eq!(s.cells().len(), 2);
        assert!("m=a".parse::<SweepSpec>().is_err());
        assert!("x=1".parse::<SweepSpec>().is_err());
        assert!("m".parse::<SweepSpec>().is_err());
    }
}
