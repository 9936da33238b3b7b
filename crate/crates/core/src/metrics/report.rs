use std::fmt::{self, Write as _};

use super::DiameterBound;
use crate::{Error, Result};

/// All quality metrics of one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub edge_cut: f64,
    pub max_comm: usize,
    pub total_comm: usize,
    pub imbalance: f64,
    pub per_block_diameter_lb: Vec<DiameterBound>,
    /// `None` when every block is disconnected.
    pub harmonic_mean_diameter: Option<f64>,
    pub per_block_comm: Vec<usize>,
    pub block_weights: Vec<f64>,
}

fn mean_to_string(mean: Option<f64>) -> String {
    mean.map_or_else(|| "unbounded".to_string(), |m| m.to_string())
}

impl MetricsReport {
    pub fn k(&self) -> usize {
        self.block_weights.len()
    }

    /// Returns true when the imbalance is within `epsilon`.
    pub fn is_balanced(&self, epsilon: f64) -> bool {
        self.imbalance <= epsilon
    }

    /// Tab-separated records: `#key<TAB>value` summary lines followed by a
    /// header and one row per block. Floats are written in shortest
    /// round-trip form, so [`MetricsReport::from_tsv`] restores the report exactly.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "#edge_cut\t{}", self.edge_cut);
        let _ = writeln!(out, "#max_comm\t{}", self.max_comm);
        let _ = writeln!(out, "#total_comm\t{}", self.total_comm);
        let _ = writeln!(out, "#imbalance\t{}", self.imbalance);
        let _ = writeln!(
            out,
            "#harmonic_mean_diameter\t{}",
            mean_to_string(self.harmonic_mean_diameter)
        );
        out.push_str("block\tweight\tcomm\tdiameter_lb\n");
        for b in 0..self.k() {
            let _ = writeln!(
                out,
                "{b}\t{}\t{}\t{}",
                self.block_weights[b], self.per_block_comm[b], self.per_block_diameter_lb[b]
            );
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        const SOURCE: &str = "metrics";
        let mut summary: Vec<(String, String)> = Vec::new();
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if let Some(key) = fields[0].strip_prefix('#') {
                if fields.len() != 2 {
                    return Err(Error::parse(
                        SOURCE,
                        lineno,
                        "summary line needs key and value",
                    ));
                }
                summary.push((key.to_string(), fields[1].to_string()));
            } else if !header_seen {
                if fields != ["block", "weight", "comm", "diameter_lb"] {
                    return Err(Error::parse(SOURCE, lineno, "unexpected block header"));
                }
                header_seen = true;
            } else {
                if fields.len() != 4 {
                    return Err(Error::parse(SOURCE, lineno, "block row needs 4 fields"));
                }
                let bad = |what: &str| Error::parse(SOURCE, lineno, format!("invalid {what}"));
                let block: usize = fields[0].parse().map_err(|_| bad("block id"))?;
                if block != rows.len() {
                    return Err(Error::parse(SOURCE, lineno, "block rows out of order"));
                }
                let weight: f64 = fields[1].parse().map_err(|_| bad("weight"))?;
                let comm: usize = fields[2].parse().map_err(|_| bad("comm"))?;
                let diam: DiameterBound = fields[3].parse().map_err(|_| bad("diameter"))?;
                rows.push((weight, comm, diam));
            }
        }
        let get = |key: &str| -> Result<&str> {
            summary
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::input(format!("metrics record lacks {key}")))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|_| Error::input(format!("invalid value for {key}")))
        };
        let count = |key: &str| -> Result<usize> {
            get(key)?
                .parse()
                .map_err(|_| Error::input(format!("invalid value for {key}")))
        };
        let mean = match get("harmonic_mean_diameter")? {
            "unbounded" => None,
            s => Some(
                s.parse()
                    .map_err(|_| Error::input("invalid value for harmonic_mean_diameter"))?,
            ),
        };
        Ok(MetricsReport {
            edge_cut: num("edge_cut")?,
            max_comm: count("max_comm")?,
            total_comm: count("total_comm")?,
            imbalance: num("imbalance")?,
            harmonic_mean_diameter: mean,
            per_block_diameter_lb: rows.iter().map(|r| r.2).collect(),
            per_block_comm: rows.iter().map(|r| r.1).collect(),
            block_weights: rows.iter().map(|r| r.0).collect(),
        })
    }
}

/// Human-readable `key: value` form.
impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |items: Vec<String>| items.join(" ");
        writeln!(f, "k: {}", self.k())?;
        writeln!(f, "edge_cut: {}", self.edge_cut)?;
        writeln!(f, "max_comm: {}", self.max_comm)?;
        writeln!(f, "total_comm: {}", self.total_comm)?;
        writeln!(f, "imbalance: {:.6}", self.imbalance)?;
        writeln!(
            f,
            "harmonic_mean_diameter: {}",
            mean_to_string(self.harmonic_mean_diameter)
        )?;
        writeln!(
            f,
            "block_weights: {}",
            join(self.block_weights.iter().map(f64::to_string).collect())
        )?;
        writeln!(
            f,
            "block_comm: {}",
            join(self.per_block_comm.iter().map(usize::to_string).collect())
        )?;
        writeln!(
            f,
            "diameter_lb: {}",
            join(
                self.per_block_diameter_lb
                    .iter()
                    .map(|d| d.to_string())
                    .collect()
            )
        )
    }
}
