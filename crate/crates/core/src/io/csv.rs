//! Dense CSV with header `x1,...,xd,label` and 1-based integer labels.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::Dataset;

fn csv_error(e: ::csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { line, msg: e.to_string() }
}

pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = ::csv::ReaderBuilder::new().trim(::csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    let d = header.len().checked_sub(1).filter(|&d| d >= 1).ok_or(Error::Parse {
        line: 1,
        msg: "expected at least one coordinate column and a label column".into(),
    })?;
    for (a, name) in header.iter().take(d).enumerate() {
        if name != format!("x{}", a + 1) {
            return Err(Error::Parse { line: 1, msg: format!("column {} should be x{}, found {name:?}", a + 1, a + 1) });
        }
    }
    if &header[d] != "label" {
        return Err(Error::Parse { line: 1, msg: format!("last column should be label, found {:?}", &header[d]) });
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let err = |msg: String| Error::Parse { line, msg };
        let x = rec
            .iter()
            .take(d)
            .map(|v| v.parse::<f64>().map_err(|_| err(format!("malformed number {v:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        let label: usize = rec[d].parse().map_err(|_| err(format!("malformed label {:?}", &rec[d])))?;
        if label == 0 {
            return Err(err("labels start at 1".into()));
        }
        points.push(x);
        labels.push(label - 1);
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    Dataset::new(points, labels, k)
}

/// Coordinates of every row; columns named `x1..xd`, any other column ignored.
pub fn read_points_csv<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = ::csv::ReaderBuilder::new().trim(::csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    let mut cols = Vec::new();
    for a in 1.. {
        match header.iter().position(|h| h == format!("x{a}")) {
            Some(c) => cols.push(c),
            None => break,
        }
    }
    if cols.is_empty() {
        return Err(Error::Parse { line: 1, msg: "no x1.. coordinate columns".into() });
    }
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let x = cols
            .iter()
            .map(|&c| {
                let v = &rec[c];
                v.parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("malformed number {v:?}") })
            })
            .collect::<Result<Vec<f64>>>()?;
        points.push(x);
    }
    Ok(points)
}

/// Writes with shortest round-trip float formatting.
pub fn write_csv<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=data.d()).map(|a| format!("x{a}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(csv_error)?;
    for (l, x) in data.points().enumerate() {
        let mut row: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
        row.push((data.label(l) + 1).to_string());
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
