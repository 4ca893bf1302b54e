//! Experiment reports: CSV rows and a text table of results
//! (rows = datasets, column groups = m, sub-columns = k).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io;

use crate::structure::Heuristic;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

/// Negative PLL per evaluated split.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SplitScores {
    pub train: f64,
    pub valid: Option<f64>,
    pub test: Option<f64>,
}

impl SplitScores {
    pub fn get(&self, split: Split) -> Option<f64> {
        match split {
            Split::Train => Some(self.train),
            Split::Valid => self.valid,
            Split::Test => self.test,
        }
    }

    /// The reported headline split: test when present, else validation, else train.
    pub fn headline(&self) -> (Split, f64) {
        if let Some(t) = self.test {
            (Split::Test, t)
        } else if let Some(v) = self.valid {
            (Split::Valid, v)
        } else {
            (Split::Train, self.train)
        }
    }

    fn present(&self) -> Vec<(Split, f64)> {
        [Split::Train, Split::Valid, Split::Test]
            .into_iter()
            .filter_map(|s| self.get(s).map(|v| (s, v)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub heuristic: Heuristic,
    pub extra_edges: usize,
    pub exchange_size: usize,
    pub seed: u64,
    pub apt_clusters: usize,
    /// Scores, or the error message of a failed cell.
    pub outcome: Result<SplitScores, String>,
    pub seconds: f64,
}

impl CellResult {
    fn key(&self) -> (Heuristic, usize, usize) {
        (self.heuristic, self.extra_edges, self.exchange_size)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub dataset: String,
    pub seed: u64,
    pub l2_strength: f64,
    pub apt_clusters: usize,
    pub max_iter: usize,
    pub cells: Vec<CellResult>,
}

pub const CSV_HEADER: [&str; 7] = [
    "dataset",
    "heuristic",
    "m",
    "k",
    "split",
    "neg_pll",
    "seconds",
];

impl ExperimentReport {
    /// Orders cells by heuristic, then m, then k.
    pub fn sort_cells(&mut self) {
        self.cells.sort_by_key(|c| c.key());
    }

    /// Writes one row per (cell, split). With `timing` off the seconds
    /// column is left empty so reruns produce identical bytes.
    pub fn write_csv<W: io::Write>(&self, out: W, timing: bool) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for cell in &self.cells {
            let seconds = if timing {
                format!("{:.3}", cell.seconds)
            } else {
                String::new()
            };
            let rows: Vec<(String, String)> = match &cell.outcome {
                Ok(scores) => scores
                    .present()
                    .into_iter()
                    .map(|(s, v)| (s.as_str().to_string(), v.to_string()))
                    .collect(),
                Err(_) => vec![("all".to_string(), "failed".to_string())],
            };
            for (split, value) in rows {
                w.write_record([
                    self.dataset.as_str(),
                    &cell.heuristic.to_string(),
                    &cell.extra_edges.to_string(),
                    &cell.exchange_size.to_string(),
                    &split,
                    &value,
                    &seconds,
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, timing: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, timing).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Renders one table per heuristic present in `reports`, showing `split`
/// negative PLL with two decimals. Missing or failed cells print as `-`.
pub fn render_table(reports: &[ExperimentReport], split: Split) -> String {
    let mut heuristics = BTreeSet::new();
    let mut ms = BTreeSet::new();
    let mut ks = BTreeSet::new();
    for c in reports.iter().flat_map(|r| &r.cells) {
        heuristics.insert(c.heuristic);
        ms.insert(c.extra_edges);
        ks.insert(c.exchange_size);
    }
    let name_w = reports
        .iter()
        .map(|r| r.dataset.len())
        .max()
        .unwrap_or(0)
        .max("dataset".len());
    const CELL: usize = 7;
    let group_w = ks.len() * CELL;

    let mut out = String::new();
    for (idx, h) in heuristics.iter().enumerate() {
        if idx > 0 {
            out.push('\n');
        }
        writeln!(
            out,
            "Negative PLL ({} split), heuristic = {}",
            split.as_str(),
            h
        )
        .unwrap();
        if let Some(r) = reports.first() {
            writeln!(
                out,
                "seed {}  l2 {}  apt_clusters {}  max_iter {}",
                r.seed, r.l2_strength, r.apt_clusters, r.max_iter
            )
            .unwrap();
        }
        write!(out, "{:<name_w$} ", "").unwrap();
        for m in &ms {
            write!(out, "|{:^group_w$}", format!("m={}", m)).unwrap();
        }
        out.push_str("|\n");
        write!(out, "{:<name_w$} ", "dataset").unwrap();
        for _ in &ms {
            out.push('|');
            for k in &ks {
                write!(out, "{:>CELL$}", format!("k={}", k)).unwrap();
            }
        }
        out.push_str("|\n");
        for r in reports {
            write!(out, "{:<name_w$} ", r.dataset).unwrap();
            for m in &ms {
                out.push('|');
                for k in &ks {
                    let value = r
                        .cells
                        .iter()
                        .find(|c| c.key() == (*h, *m, *k))
                        .and_then(|c| c.outcome.as_ref().ok())
                        .and_then(|s| s.get(split));
                    match value {
                        Some(v) => write!(out, "{:>CELL$.2}", v).unwrap(),
                        None => write!(out, "{:>CELL$}", "-").unwrap(),
                    }
                }
            }
            out.push_str("|\n");
        }
    }
    out
}
