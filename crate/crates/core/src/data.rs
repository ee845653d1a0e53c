//! Dataset ingestion, validation and label canonicalization.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A supervised dataset: `N` samples of `n` continuous features plus a binary
/// label per sample. Values are stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

/// Class proportions of a label vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRatios {
    pub r1: f64,
    pub r0: f64,
    pub n1: usize,
    pub swapped: bool,
}

impl Dataset {
    /// Builds a dataset from feature columns, validating every invariant.
    pub fn new(
        columns: Vec<Vec<f64>>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::NoFeatures);
        }
        if feature_names.len() != columns.len() {
            return Err(Error::Shape(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                columns.len()
            )));
        }
        let n_samples = labels.len();
        if n_samples < 2 {
            return Err(Error::TooFewSamples(n_samples));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n_samples {
                return Err(Error::Shape(format!(
                    "column {j} has {} rows, labels have {n_samples}",
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: i, column: j });
            }
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(Error::LabelNotBinary {
                row: i,
                value: labels[i].to_string(),
            });
        }
        let ones = labels.iter().filter(|&&y| y == 1).count();
        if ones == 0 {
            return Err(Error::SingleClass(0));
        }
        if ones == n_samples {
            return Err(Error::SingleClass(1));
        }
        Ok(Self {
            columns,
            labels,
            feature_names,
        })
    }

    /// Same as [`Dataset::new`] with generated names `f1..fn`.
    pub fn with_default_names(columns: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        let names = (1..=columns.len()).map(|j| format!("f{j}")).collect();
        Self::new(columns, labels, names)
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Writes the dataset as CSV with the label as last column. Values use the
    /// shortest representation that parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, out: W, label_column: &str) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(label_column);
        wtr.write_record(&header)?;
        let mut record = Vec::with_capacity(self.n_features() + 1);
        for i in 0..self.n_samples() {
            record.clear();
            record.extend(self.columns.iter().map(|c| c[i].to_string()));
            record.push(self.labels[i].to_string());
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, label_column: &str) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file), label_column)
    }
}

/// Reads a CSV file with a header row. The column named `label_column` holds
/// the 0/1 labels; every other column is a numeric feature.
pub fn load_dataset(path: &Path, label_column: &str) -> Result<Dataset> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = std::fs::File::open(path)?;
    read_dataset(file, label_column)
}

pub fn read_dataset<R: std::io::Read>(input: R, label_column: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let feature_idx: Vec<usize> = (0..headers.len()).filter(|&c| c != label_idx).collect();
    let feature_names: Vec<String> = feature_idx
        .iter()
        .map(|&c| headers[c].to_string())
        .collect();

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); feature_idx.len()];
    let mut labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let raw_label = &record[label_idx];
        let label = match raw_label {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(Error::LabelNotBinary {
                    row,
                    value: other.to_string(),
                })
            }
        };
        labels.push(label);
        for (slot, &c) in feature_idx.iter().enumerate() {
            let cell = &record[c];
            let value: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row,
                column: headers[c].to_string(),
                value: cell.to_string(),
            })?;
            columns[slot].push(value);
        }
    }
    Dataset::new(columns, labels, feature_names)
}

pub fn class_ratios(d: &Dataset) -> ClassRatios {
    ratios_of(d.labels(), false)
}

fn ratios_of(labels: &[u8], swapped: bool) -> ClassRatios {
    let n1 = labels.iter().filter(|&&y| y == 1).count();
    let n = labels.len();
    // r0 is computed from counts so that r1 + r0 == 1 holds exactly
    ClassRatios {
        r1: n1 as f64 / n as f64,
        r0: (n - n1) as f64 / n as f64,
        n1,
        swapped,
    }
}

/// Flips the labels when class 1 is the majority so that the returned dataset
/// always has `r1 <= 1/2`. Feature values are untouched.
pub fn canonicalize_labels(d: &Dataset) -> (Dataset, ClassRatios) {
    let ratios = class_ratios(d);
    if 2 * ratios.n1 <= d.n_samples() {
        return (d.clone(), ratios);
    }
    let flipped: Vec<u8> = d.labels.iter().map(|&y| 1 - y).collect();
    let ratios = ratios_of(&flipped, true);
    let out = Dataset {
        columns: d.columns.clone(),
        labels: flipped,
        feature_names: d.feature_names.clone(),
    };
    (out, ratios)
}
