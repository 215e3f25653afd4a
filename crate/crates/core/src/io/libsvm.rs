//! Sparse `label idx:val ...` text format with 1-based feature indices.

use std::io::BufRead;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Dataset;

#[derive(Clone, Debug, PartialEq)]
pub struct LibsvmRecord {
    pub label: String,
    /// `(index, value)` with strictly increasing 1-based indices.
    pub features: Vec<(usize, f64)>,
}

/// Cluster `i` (0-based) corresponds to `tokens[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LabelMap {
    pub tokens: Vec<String>,
}

impl LabelMap {
    /// Sorts distinct tokens numerically when all of them are numbers,
    /// lexicographically otherwise.
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut distinct: Vec<String> = tokens.into_iter().map(str::to_owned).collect();
        distinct.sort();
        distinct.dedup();
        let numeric: Option<Vec<f64>> = distinct.iter().map(|t| t.parse::<f64>().ok()).collect();
        if let Some(values) = numeric {
            let mut pairs: Vec<(f64, String)> = values.into_iter().zip(distinct).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            distinct = pairs.into_iter().map(|p| p.1).collect();
        }
        Self { tokens: distinct }
    }

    pub fn k(&self) -> usize {
        self.tokens.len()
    }

    pub fn cluster_of(&self, token: &str) -> Option<usize> {
        self.tokens.iter().position(|t| t == token)
    }

    pub fn token(&self, cluster: usize) -> &str {
        &self.tokens[cluster]
    }
}

fn parse_line(line: &str, number: usize) -> Result<Option<LibsvmRecord>> {
    let content = line.split('#').next().unwrap_or("").trim();
    if content.is_empty() {
        return Ok(None);
    }
    let err = |msg: String| Error::Parse { line: number, msg };
    let mut tokens = content.split_whitespace();
    let label = tokens.next().expect("nonempty line").to_owned();
    let mut features = Vec::new();
    let mut last = 0;
    for tok in tokens {
        let (idx, val) = tok.split_once(':').ok_or_else(|| err(format!("malformed feature {tok:?}")))?;
        let idx: usize = idx.parse().map_err(|_| err(format!("malformed index in {tok:?}")))?;
        let val: f64 = val.parse().map_err(|_| err(format!("malformed value in {tok:?}")))?;
        if idx == 0 {
            return Err(err("feature indices start at 1".into()));
        }
        if idx <= last {
            return Err(err(format!("index {idx} does not increase past {last}")));
        }
        if !val.is_finite() {
            return Err(err(format!("non-finite value in {tok:?}")));
        }
        last = idx;
        features.push((idx, val));
    }
    Ok(Some(LibsvmRecord { label, features }))
}

/// Parses every record; lines are numbered from 1 in errors.
pub fn parse_records<R: BufRead>(reader: R) -> Result<Vec<(usize, LibsvmRecord)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        if let Some(rec) = parse_line(&line?, i + 1)? {
            out.push((i + 1, rec));
        }
    }
    Ok(out)
}

fn densify(records: &[(usize, LibsvmRecord)], d: Option<usize>, map: &LabelMap) -> Result<Dataset> {
    let max_idx = records.iter().filter_map(|(_, r)| r.features.last().map(|f| f.0)).max().unwrap_or(0);
    let d = match d {
        Some(d) => {
            if let Some((line, _)) = records.iter().find(|(_, r)| r.features.last().is_some_and(|f| f.0 > d)) {
                return Err(Error::Parse { line: *line, msg: format!("feature index exceeds dimension {d}") });
            }
            d
        }
        None => max_idx,
    };
    let mut points = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for (line, rec) in records {
        let mut x = vec![0.0; d];
        for &(idx, v) in &rec.features {
            x[idx - 1] = v;
        }
        points.push(x);
        labels.push(
            map.cluster_of(&rec.label)
                .ok_or_else(|| Error::Parse { line: *line, msg: format!("unknown label {:?}", rec.label) })?,
        );
    }
    Dataset::new(points, labels, map.k())
}

/// Dense dataset and the label mapping derived from it. `d` defaults to the
/// largest index present.
pub fn parse_libsvm<R: BufRead>(reader: R, d: Option<usize>) -> Result<(Dataset, LabelMap)> {
    let records = parse_records(reader)?;
    let map = LabelMap::from_tokens(records.iter().map(|(_, r)| r.label.as_str()));
    Ok((densify(&records, d, &map)?, map))
}

/// As [`parse_libsvm`], with a fixed label mapping (e.g. a training set's).
pub fn parse_libsvm_with_labels<R: BufRead>(reader: R, d: Option<usize>, map: &LabelMap) -> Result<Dataset> {
    densify(&parse_records(reader)?, d, map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_line_densifies() {
        let (d, map) = parse_libsvm("1 1:0.5 3:2.0\n2 2:1\n".as_bytes(), None).unwrap();
        assert_eq!(d.point(0), &[0.5, 0.0, 2.0]);
        assert_eq!(d.label(0), 0);
        assert_eq!(map.tokens, vec!["1", "2"]);
    }

    #[test]
    fn labels_sorted_numerically() {
        let (d, map) = parse_libsvm("7 1:1\n3 1:2\n10 1:5\n".as_bytes(), None).unwrap();
        assert_eq!(map.tokens, vec!["3", "7", "10"]);
        assert_eq!(d.labels(), &[1, 0, 2]);
        let map = LabelMap::from_tokens(["b", "a", "b"]);
        assert_eq!(map.tokens, vec!["a", "b"]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "1 1:0\n\n2 2:1 2:3\n";
        assert!(matches!(parse_libsvm(bad.as_bytes(), None), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_libsvm("1 x:1\n".as_bytes(), None), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_libsvm("1 1:1\n2 4:1\n".as_bytes(), Some(3)), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_libsvm("1 0:1\n".as_bytes(), None), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn test_set_uses_training_map() {
        let (_, map) = parse_libsvm("a 1:0\nb 1:1\n".as_bytes(), None).unwrap();
        let t = parse_libsvm_with_labels("b 1:4\na 2:1\n".as_bytes(), Some(2), &map).unwrap();
        assert_eq!(t.labels(), &[1, 0]);
        assert_eq!(t.d(), 2);
        assert!(parse_libsvm_with_labels("c 1:0\na 1:1\n".as_bytes(), None, &map).is_err());
    }
}
