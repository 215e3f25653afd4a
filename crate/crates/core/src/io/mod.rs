//! Dataset formats, model files, canonical JSON and SVG output.

pub mod csv;
pub mod json;
pub mod libsvm;
pub mod svg;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Dataset;

pub use self::csv::{read_csv, write_csv};
pub use self::json::{read_model, read_sites, to_canonical_json, write_model, ModelFile};
pub use self::libsvm::{parse_libsvm, parse_libsvm_with_labels, LabelMap, LibsvmRecord};
pub use self::svg::{emit_svg, SvgOptions};

/// Input dataset formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Libsvm,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "libsvm" => Ok(Self::Libsvm),
            "csv" => Ok(Self::Csv),
            other => Err(Error::InvalidParameter(format!("unknown format {other:?}"))),
        }
    }
}

/// Reads a dataset file. For LIBSVM input, `labels` and `d` carry a training
/// set's label mapping and dimension over to a test set.
pub fn load_dataset(
    path: &Path,
    format: Format,
    labels: Option<&LabelMap>,
    d: Option<usize>,
) -> Result<(Dataset, Option<LabelMap>)> {
    let reader = BufReader::new(File::open(path)?);
    match format {
        Format::Csv => Ok((read_csv(reader)?, None)),
        Format::Libsvm => match labels {
            Some(map) => {
                let d = parse_libsvm_with_labels(reader, d, map)?;
                Ok((d, Some(map.clone())))
            }
            None => {
                let (d, map) = parse_libsvm(reader, d)?;
                Ok((d, Some(map)))
            }
        },
    }
}

/// Query points for classification. A `label` column (CSV) or the label
/// token (LIBSVM) may be present and is ignored.
pub fn read_points(path: &Path, format: Format, d: usize) -> Result<Vec<Vec<f64>>> {
    let reader = BufReader::new(File::open(path)?);
    let points: Vec<Vec<f64>> = match format {
        Format::Libsvm => libsvm::parse_records(reader)?
            .into_iter()
            .map(|(line, rec)| {
                let mut x = vec![0.0; d];
                for (idx, v) in rec.features {
                    if idx > d {
                        return Err(Error::Parse { line, msg: format!("feature index exceeds dimension {d}") });
                    }
                    x[idx - 1] = v;
                }
                Ok(x)
            })
            .collect::<Result<_>>()?,
        Format::Csv => self::csv::read_points_csv(reader)?,
    };
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, actual: p.len() });
    }
    Ok(points)
}
