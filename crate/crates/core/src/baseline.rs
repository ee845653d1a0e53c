//! Median binarization followed by the same Tarone search on binary supports.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::miner::{mine_columns, MinerOptions, MiningResult};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    LeMed,
    GtMed,
}

/// `2n` binary indicators derived from `n` continuous features. Column `2j`
/// is `v <= med(j)` and column `2j + 1` its complement.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryDataset {
    columns: Vec<Vec<u8>>,
    labels: Vec<u8>,
    provenance: Vec<(usize, Side)>,
}

impl BinaryDataset {
    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, k: usize) -> &[u8] {
        &self.columns[k]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn provenance(&self) -> &[(usize, Side)] {
        &self.provenance
    }

    /// Generated names `f<j>_le` / `f<j>_gt`, with 1-based `j`.
    pub fn feature_names(&self) -> Vec<String> {
        self.provenance
            .iter()
            .map(|&(j, side)| match side {
                Side::LeMed => format!("f{}_le", j + 1),
                Side::GtMed => format!("f{}_gt", j + 1),
            })
            .collect()
    }

    /// Binary features that originate from any of the given source features.
    pub fn children_of(&self, sources: &[usize]) -> Vec<usize> {
        self.provenance
            .iter()
            .enumerate()
            .filter(|(_, (j, _))| sources.contains(j))
            .map(|(k, _)| k)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W, label_column: &str) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = self.feature_names();
        header.push(label_column.to_string());
        wtr.write_record(&header)?;
        for i in 0..self.n_samples() {
            let mut row: Vec<String> = self.columns.iter().map(|c| c[i].to_string()).collect();
            row.push(self.labels[i].to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, label_column: &str) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file), label_column)
    }
}

/// Middle value for odd `N`, mean of the two middle values for even `N`.
pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn median_binarize(d: &Dataset) -> BinaryDataset {
    let mut columns = Vec::with_capacity(2 * d.n_features());
    let mut provenance = Vec::with_capacity(2 * d.n_features());
    for (j, col) in d.columns().iter().enumerate() {
        let med = median(col);
        let le: Vec<u8> = col.iter().map(|&v| u8::from(v <= med)).collect();
        let gt: Vec<u8> = le.iter().map(|&b| 1 - b).collect();
        columns.push(le);
        columns.push(gt);
        provenance.push((j, Side::LeMed));
        provenance.push((j, Side::GtMed));
    }
    BinaryDataset {
        columns,
        labels: d.labels().to_vec(),
        provenance,
    }
}

/// Runs the miner with products of raw 0/1 columns, so `eta` is the classical
/// itemset frequency and `eta1` the class-1 frequency.
pub fn mine_binary(b: &BinaryDataset, alpha: f64, opts: &MinerOptions) -> Result<MiningResult> {
    let columns: Vec<Vec<f64>> = b
        .columns
        .iter()
        .map(|c| c.iter().map(|&v| f64::from(v)).collect())
        .collect();
    mine_columns(&columns, &b.labels, alpha, opts)
}
