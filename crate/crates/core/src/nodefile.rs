//! Node files: CSV rows of coordinates (plus the predecessor index of
//! generated nodes) preceded by a `#`-prefixed JSON header line.
//!
//! ```text
//! # {"format":"nodefill-nodes","dim":2,"count":3,...}
//! x,y,beta
//! 0.0000000000000000e0,0.0000000000000000e0,
//! ...
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fill_pnp::{FillResult, FillStats};
use crate::points::Points;

pub const FORMAT: &str = "nodefill-nodes";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeHeader {
    pub format: String,
    pub dim: usize,
    pub count: usize,
    pub algorithm: String,
    #[serde(default)]
    pub domain: Option<String>,
    #[serde(default)]
    pub spacing: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub seed_count: usize,
    #[serde(default)]
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeFile {
    pub header: NodeHeader,
    pub nodes: Points,
    /// Predecessor of every row; `None` for seed rows.
    pub beta: Option<Vec<Option<usize>>>,
}

const AXES: [&str; 3] = ["x", "y", "z"];

fn column_name(k: usize) -> String {
    AXES.get(k)
        .map_or_else(|| format!("x{}", k + 1), |s| s.to_string())
}

impl NodeFile {
    pub fn from_fill(
        result: &FillResult,
        algorithm: &str,
        domain: Option<String>,
        spacing: Option<String>,
        seed: Option<u64>,
    ) -> Self {
        let beta = result
            .predecessors
            .as_ref()
            .map(|_| (0..result.len()).map(|j| result.predecessor(j)).collect());
        NodeFile {
            header: NodeHeader {
                format: FORMAT.into(),
                dim: result.nodes.dim(),
                count: result.len(),
                algorithm: algorithm.into(),
                domain,
                spacing,
                seed,
                seed_count: result.seed_count,
                truncated: result.truncated,
                terminal: result
                    .predecessors
                    .as_ref()
                    .map(|_| result.terminal.clone()),
            },
            nodes: result.nodes.clone(),
            beta,
        }
    }

    /// Rebuilds the fill result (timings are not stored).
    pub fn to_fill_result(&self) -> FillResult {
        let predecessors = self.beta.as_ref().map(|b| {
            b.iter()
                .skip(self.header.seed_count)
                .map(|x| x.unwrap_or(0))
                .collect()
        });
        FillResult {
            nodes: self.nodes.clone(),
            seed_count: self.header.seed_count,
            predecessors,
            terminal: self.header.terminal.clone().unwrap_or_default(),
            truncated: self.header.truncated,
            stats: FillStats::default(),
        }
    }

    pub fn boundary(&self) -> Points {
        self.nodes
            .slice(0..self.header.seed_count.min(self.nodes.len()))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header =
            serde_json::to_string(&self.header).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w, "# {header}")?;
        let d = self.nodes.dim();
        let mut cols: Vec<String> = (0..d).map(column_name).collect();
        if self.beta.is_some() {
            cols.push("beta".into());
        }
        writeln!(w, "{}", cols.join(","))?;
        for (i, p) in self.nodes.iter().enumerate() {
            let mut line = p
                .iter()
                .map(|x| format!("{x:.16e}"))
                .collect::<Vec<_>>()
                .join(",");
            if let Some(beta) = &self.beta {
                line.push(',');
                if let Some(b) = beta[i] {
                    line.push_str(&b.to_string());
                }
            }
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path)?;
        self.write_to(BufWriter::new(file))
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Parse("empty node file".into()))??;
        let json = first
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("node file must start with a '#' header line".into()))?;
        let header: NodeHeader = serde_json::from_str(json.trim())
            .map_err(|e| Error::Parse(format!("bad node file header: {e}")))?;
        if header.format != FORMAT {
            return Err(Error::Parse(format!(
                "unknown node file format {:?}",
                header.format
            )));
        }
        let cols = lines
            .next()
            .ok_or_else(|| Error::Parse("missing column line".into()))??;
        let cols: Vec<&str> = cols.split(',').map(str::trim).collect();
        let d = header.dim;
        let has_beta = match cols.len() {
            n if n == d => false,
            n if n == d + 1 && cols[d] == "beta" => true,
            _ => {
                return Err(Error::Parse(format!(
                    "expected {d} coordinate columns (and optionally beta), got {cols:?}"
                )))
            }
        };
        let mut nodes = Points::with_capacity(d, header.count);
        let mut beta = has_beta.then(Vec::new);
        let mut p = vec![0.0f64; d];
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(Error::Parse(format!(
                    "row {}: expected {} fields, got {}",
                    lineno + 1,
                    cols.len(),
                    fields.len()
                )));
            }
            for k in 0..d {
                p[k] = fields[k].trim().parse().map_err(|_| {
                    Error::Parse(format!("row {}: bad number {:?}", lineno + 1, fields[k]))
                })?;
                if !p[k].is_finite() {
                    return Err(Error::Parse(format!(
                        "row {}: non-finite coordinate",
                        lineno + 1
                    )));
                }
            }
            nodes.push(&p);
            if let Some(b) = beta.as_mut() {
                let f = fields[d].trim();
                b.push(if f.is_empty() {
                    None
                } else {
                    Some(
                        f.parse().map_err(|_| {
                            Error::Parse(format!("row {}: bad beta {f:?}", lineno + 1))
                        })?,
                    )
                });
            }
        }
        if nodes.len() != header.count {
            return Err(Error::Parse(format!(
                "header says {} nodes, file has {}",
                header.count,
                nodes.len()
            )));
        }
        Ok(NodeFile {
            header,
            nodes,
            beta,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path)?;
        Self::read_from(BufReader::new(file))
    }
}
