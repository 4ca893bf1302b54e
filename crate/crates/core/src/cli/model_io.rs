//! Versioned plain-text model files.
//!
//! ```text
//! forced-pruning-model 1
//! n_vars 3
//! node_weights 0.5 -1 0.25
//! edges 2
//! 0 1 1.5
//! 1 2 -0.75
//! tying 5 2
//! assignment 0 1 0 1 1
//! means 0.375 -0.5
//! end
//! ```
//!
//! The `tying` section is optional. Weights are written in Rust's shortest
//! round-trip float notation, so a load after a save is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Edge, PairwiseModel};
use crate::param_learn::TyingPartition;

pub const MAGIC: &str = "forced-pruning-model";
pub const FORMAT_VERSION: &str = "1";

pub fn model_to_string(model: &PairwiseModel, partition: Option<&TyingPartition>) -> String {
    let mut out = String::new();
    let join = |v: &[f64]| {
        v.iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(out, "{} {}", MAGIC, FORMAT_VERSION).unwrap();
    writeln!(out, "n_vars {}", model.n_vars()).unwrap();
    writeln!(out, "node_weights {}", join(model.node_weights())).unwrap();
    writeln!(out, "edges {}", model.n_edges()).unwrap();
    for (e, w) in model.weighted_edges() {
        writeln!(out, "{} {} {}", e.lo(), e.hi(), w).unwrap();
    }
    if let Some(p) = partition {
        writeln!(out, "tying {} {}", p.n_params(), p.n_clusters()).unwrap();
        let ids: Vec<String> = p.assignment().iter().map(|a| a.to_string()).collect();
        writeln!(out, "assignment {}", ids.join(" ")).unwrap();
        writeln!(out, "means {}", join(p.means())).unwrap();
    }
    writeln!(out, "end").unwrap();
    out
}

pub fn save_model(
    path: impl AsRef<Path>,
    model: &PairwiseModel,
    partition: Option<&TyingPartition>,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model, partition)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(PairwiseModel, Option<TyingPartition>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn bad(&self, message: impl Into<String>) -> Error {
        Error::ModelFormat {
            line: self.line,
            message: message.into(),
        }
    }

    /// Next non-blank line split into tokens.
    fn next(&mut self) -> Result<Vec<&'a str>> {
        for (idx, raw) in self.inner.by_ref() {
            self.line = idx + 1;
            let tokens: Vec<&str> = raw.split_whitespace().collect();
            if !tokens.is_empty() {
                return Ok(tokens);
            }
        }
        self.line += 1;
        Err(self.bad("unexpected end of file"))
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let tokens = self.next()?;
        if tokens[0] != key {
            return Err(self.bad(format!("expected {:?}, found {:?}", key, tokens[0])));
        }
        Ok(tokens[1..].to_vec())
    }

    fn count(&self, token: &str) -> Result<usize> {
        token
            .parse()
            .map_err(|_| self.bad(format!("invalid count {:?}", token)))
    }

    fn float(&self, token: &str) -> Result<f64> {
        let v: f64 = token
            .parse()
            .map_err(|_| self.bad(format!("invalid number {:?}", token)))?;
        if !v.is_finite() {
            return Err(self.bad(format!("non-finite weight {:?}", token)));
        }
        Ok(v)
    }

    fn single(&self, tokens: &[&str]) -> Result<usize> {
        match tokens {
            [one] => self.count(one),
            _ => Err(self.bad("expected exactly one value")),
        }
    }
}

pub fn parse_model(text: &str) -> Result<(PairwiseModel, Option<TyingPartition>)> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };

    let header = lines.next()?;
    if header[0] != MAGIC {
        return Err(lines.bad(format!("not a model file (header {:?})", header[0])));
    }
    let version = header.get(1).copied().unwrap_or("");
    if version != FORMAT_VERSION || header.len() != 2 {
        return Err(Error::VersionMismatch {
            found: version.to_string(),
            expected: FORMAT_VERSION.to_string(),
        });
    }

    let tokens = lines.keyed("n_vars")?;
    let n_vars = lines.single(&tokens)?;

    let tokens = lines.keyed("node_weights")?;
    if tokens.len() != n_vars {
        return Err(lines.bad(format!(
            "expected {} node weights, found {}",
            n_vars,
            tokens.len()
        )));
    }
    let node_weights = tokens
        .iter()
        .map(|t| lines.float(t))
        .collect::<Result<Vec<_>>>()?;

    let tokens = lines.keyed("edges")?;
    let n_edges = lines.single(&tokens)?;
    let mut edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let tokens = lines.next()?;
        let [lo, hi, w] = tokens[..] else {
            return Err(lines.bad("edge lines need \"lo hi weight\""));
        };
        let (lo, hi) = (lines.count(lo)?, lines.count(hi)?);
        if lo >= n_vars || hi >= n_vars {
            return Err(lines.bad(format!("edge ({}, {}) out of range", lo, hi)));
        }
        let edge = Edge::new(lo, hi).map_err(|e| lines.bad(e.to_string()))?;
        edges.push((edge, lines.float(w)?));
    }
    let model = PairwiseModel::from_parts(n_vars, node_weights, edges)
        .map_err(|e| lines.bad(e.to_string()))?;

    let tokens = lines.next()?;
    let partition = match tokens[0] {
        "end" => None,
        "tying" => {
            let [n_params, n_clusters] = tokens[1..] else {
                return Err(lines.bad("expected \"tying <params> <clusters>\""));
            };
            let (n_params, n_clusters) = (lines.count(n_params)?, lines.count(n_clusters)?);
            if n_params != model.n_params() {
                return Err(lines.bad(format!(
                    "tying covers {} parameters but the model has {}",
                    n_params,
                    model.n_params()
                )));
            }
            let ids = lines.keyed("assignment")?;
            if ids.len() != n_params {
                return Err(lines.bad(format!(
                    "expected {} cluster ids, found {}",
                    n_params,
                    ids.len()
                )));
            }
            let assignment = ids
                .iter()
                .map(|t| lines.count(t))
                .collect::<Result<Vec<_>>>()?;
            let means = lines.keyed("means")?;
            if means.len() != n_clusters {
                return Err(lines.bad(format!(
                    "expected {} means, found {}",
                    n_clusters,
                    means.len()
                )));
            }
            let means = means
                .iter()
                .map(|t| lines.float(t))
                .collect::<Result<Vec<_>>>()?;
            let partition =
                TyingPartition::new(assignment, means).map_err(|e| lines.bad(e.to_string()))?;
            let end = lines.next()?;
            if end[0] != "end" {
                return Err(lines.bad(format!("expected \"end\", found {:?}", end[0])));
            }
            Some(partition)
        }
        other => return Err(lines.bad(format!("expected \"tying\" or \"end\", found {:?}", other))),
    };
    Ok((model, partition))
}
