//! Binary datasets in the comma-separated density-estimation format.
//!
//! Each line holds one instance as `0`/`1` tokens separated by commas. The
//! table is immutable once built. Alongside the raw rows it keeps a
//! compressed view of distinct rows with multiplicities, which is what the
//! likelihood code iterates over.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Joint counts of one ordered variable pair `(i, j)`; `n10` counts `x_i = 1, x_j = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PairCounts {
    pub n00: usize,
    pub n01: usize,
    pub n10: usize,
    pub n11: usize,
}

impl PairCounts {
    pub fn total(&self) -> usize {
        self.n00 + self.n01 + self.n10 + self.n11
    }

    /// Counts for the swapped pair `(j, i)`.
    pub fn transposed(&self) -> PairCounts {
        PairCounts {
            n00: self.n00,
            n01: self.n10,
            n10: self.n01,
            n11: self.n11,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DataSet {
    name: String,
    n_vars: usize,
    rows: Vec<u8>,
    patterns: Vec<u8>,
    multiplicity: Vec<usize>,
}

impl DataSet {
    pub fn new(name: impl Into<String>, n_vars: usize, instances: &[Vec<u8>]) -> Result<Self> {
        let mut rows = Vec::with_capacity(n_vars * instances.len());
        for (idx, inst) in instances.iter().enumerate() {
            if inst.len() != n_vars {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {} values, found {}", n_vars, inst.len()),
                });
            }
            if let Some(v) = inst.iter().find(|&&v| v > 1) {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("value {} is not binary", v),
                });
            }
            rows.extend_from_slice(inst);
        }
        Self::from_flat(name.into(), n_vars, rows)
    }

    fn from_flat(name: String, n_vars: usize, rows: Vec<u8>) -> Result<Self> {
        if n_vars < 2 {
            return Err(Error::Parse {
                line: 1,
                message: format!("need at least 2 variables, found {}", n_vars),
            });
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "dataset has no instances".into(),
            });
        }

        let mut distinct: BTreeMap<&[u8], usize> = BTreeMap::new();
        for row in rows.chunks_exact(n_vars) {
            *distinct.entry(row).or_insert(0) += 1;
        }
        let mut patterns = Vec::with_capacity(distinct.len() * n_vars);
        let mut multiplicity = Vec::with_capacity(distinct.len());
        for (row, count) in distinct {
            patterns.extend_from_slice(row);
            multiplicity.push(count);
        }

        Ok(DataSet {
            name,
            n_vars,
            rows,
            patterns,
            multiplicity,
        })
    }

    /// Parses the comma-separated text format. Blank lines are skipped.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut n_vars = None;
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut width = 0;
            for token in line.split(',') {
                let value = match token.trim() {
                    "0" => 0u8,
                    "1" => 1u8,
                    other => {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("invalid token {:?}, expected 0 or 1", other),
                        })
                    }
                };
                rows.push(value);
                width += 1;
            }
            match n_vars {
                None => n_vars = Some(width),
                Some(expected) if expected != width => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected {} values, found {}", expected, width),
                    })
                }
                Some(_) => {}
            }
        }
        let n_vars = n_vars.ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty file".into(),
        })?;
        Self::from_flat(name.into(), n_vars, rows)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Number of instances.
    pub fn len(&self) -> usize {
        self.rows.len() / self.n_vars
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn instance(&self, n: usize) -> &[u8] {
        &self.rows[n * self.n_vars..(n + 1) * self.n_vars]
    }

    pub fn instances(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.rows.chunks_exact(self.n_vars)
    }

    /// Distinct rows in lexicographic order, each with its multiplicity.
    pub fn patterns(&self) -> impl Iterator<Item = (&[u8], usize)> + '_ {
        self.patterns
            .chunks_exact(self.n_vars)
            .zip(self.multiplicity.iter().copied())
    }

    pub fn n_patterns(&self) -> usize {
        self.multiplicity.len()
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n_vars {
            return Err(Error::IndexOutOfRange {
                index: i,
                n_vars: self.n_vars,
            });
        }
        Ok(())
    }

    pub fn pair_counts(&self, i: usize, j: usize) -> Result<PairCounts> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        let mut c = PairCounts::default();
        for (row, count) in self.patterns() {
            match (row[i], row[j]) {
                (0, 0) => c.n00 += count,
                (0, _) => c.n01 += count,
                (_, 0) => c.n10 += count,
                _ => c.n11 += count,
            }
        }
        Ok(c)
    }

    /// Number of instances with `x_i = 1`.
    pub fn marginal_count(&self, i: usize) -> Result<usize> {
        self.check_index(i)?;
        Ok(self
            .patterns()
            .filter(|(row, _)| row[i] == 1)
            .map(|(_, count)| count)
            .sum())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 2);
        for row in self.instances() {
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push(if *v == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_text().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Reads a dataset file; the dataset is named after the file stem.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<DataSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_name()
        .and_then(|s| s.to_str())
        .map(|s| s.split('.').next().unwrap_or(s).to_string())
        .unwrap_or_default();
    DataSet::parse(name, &text)
}
