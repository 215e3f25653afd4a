//! Canonical JSON, model files and site files.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::{PowerDiagram, SiteSet};

/// Compact JSON with sorted object keys and every float printed with six
/// decimals. Non-finite floats have already become `null` in `value`.
pub fn to_canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value);
    out
}

fn write_value(out: &mut String, value: &Value) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let s = format!("{:.6}", n.as_f64().unwrap_or(f64::NAN));
                out.push_str(if s == "-0.000000" { "0.000000" } else { &s });
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, v);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(out, &map[k]);
            }
            out.push('}');
        }
    }
}

/// Serialized classifier: `{d, k, sites, gamma, epsilon, variant, t}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: usize,
    pub k: usize,
    pub sites: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    /// `None` stands for an unbounded margin.
    pub epsilon: Option<f64>,
    pub variant: Option<String>,
    pub t: Option<usize>,
}

impl ModelFile {
    pub fn new(diagram: &PowerDiagram, epsilon: f64, variant: Option<String>, t: Option<usize>) -> Self {
        Self {
            d: diagram.d(),
            k: diagram.k(),
            sites: diagram.sites.as_slice().to_vec(),
            gamma: diagram.gamma.clone(),
            epsilon: epsilon.is_finite().then_some(epsilon),
            variant,
            t,
        }
    }

    pub fn diagram(&self) -> Result<PowerDiagram> {
        let sites = SiteSet::new(self.sites.clone())?;
        if sites.k() != self.k {
            return Err(Error::ClusterMismatch { expected: self.k, actual: sites.k() });
        }
        if sites.d() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, actual: sites.d() });
        }
        PowerDiagram::new(sites, self.gamma.clone())
    }
}

pub fn write_model(path: &Path, model: &ModelFile) -> Result<()> {
    let text = to_canonical_json(&serde_json::to_value(model)?);
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Sites from a JSON array of coordinate arrays, or from text with one
/// site per line and comma- or whitespace-separated coordinates.
pub fn parse_sites(text: &str) -> Result<SiteSet> {
    if text.trim_start().starts_with('[') {
        let rows: Vec<Vec<f64>> = serde_json::from_str(text)?;
        return SiteSet::new(rows);
    }
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse { line: i + 1, msg: format!("malformed number {t:?}") }))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    SiteSet::new(rows)
}

pub fn read_sites(path: &Path) -> Result<SiteSet> {
    parse_sites(&std::fs::read_to_string(path)?)
}
