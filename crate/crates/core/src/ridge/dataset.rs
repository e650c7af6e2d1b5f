use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::StandardFamily;
use crate::error::{Error, Result};

/// Rows of features with one numeric label each.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    labels: DVector<f64>,
    column_names: Vec<String>,
    label_name: String,
}

fn default_names(p: usize) -> Vec<String> {
    (0..p).map(|k| format!("x{k}")).collect()
}

impl Dataset {
    /// Build a dataset, checking `n ≥ p ≥ 1` and that every entry is finite.
    pub fn new(features: DMatrix<f64>, labels: DVector<f64>) -> Result<Self> {
        let p = features.ncols();
        Self::with_names(features, labels, default_names(p), "y".into())
    }

    pub fn with_names(
        features: DMatrix<f64>,
        labels: DVector<f64>,
        column_names: Vec<String>,
        label_name: String,
    ) -> Result<Self> {
        let (n, p) = features.shape();
        if p == 0 {
            return Err(Error::InvalidParameter {
                name: "features",
                reason: "need at least one feature column".into(),
            });
        }
        if n < p {
            return Err(Error::InsufficientRows { rows: n, needed: p });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        if column_names.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: column_names.len(),
            });
        }
        if features.iter().chain(labels.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dataset",
                reason: "contains non-finite values".into(),
            });
        }
        Ok(Self {
            features,
            labels,
            column_names,
            label_name,
        })
    }

    pub fn rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    /// Write a headered CSV with the label as the last column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.column_names.clone();
        header.push(self.label_name.clone());
        w.write_record(&header)?;
        for i in 0..self.rows() {
            let mut record: Vec<String> = self.features.row(i).iter().map(f64::to_string).collect();
            record.push(self.labels[i].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Parse a headered numeric CSV, taking `target` as the label column.
pub fn read_csv<R: Read>(input: R, target: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let target_idx = header
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| Error::MissingColumn(target.to_owned()))?;

    let p = header.len() - 1;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| {
                    Error::NonNumeric {
                        // 1-based data row, header excluded
                        row: row + 1,
                        column: header[col].clone(),
                        value: cell.to_owned(),
                    }
                })?;
            if col == target_idx {
                labels.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let n = labels.len();
    let names = header
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != target_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Dataset::with_names(
        DMatrix::from_row_slice(n, p, &values),
        DVector::from_vec(labels),
        names,
        target.to_owned(),
    )
}

pub fn load_csv(path: &Path, target: &str) -> Result<Dataset> {
    read_csv(std::fs::File::open(path)?, target)
}

/// Draw `n` rows with features uniform on `[−1, 1]` and labels
/// `w0ᵀx + e`, `e ~ N(0, noise_sd²)`.
pub fn synth_data(n: usize, w0: &[f64], noise_sd: f64, seed: u64) -> Result<Dataset> {
    let p = w0.len();
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter {
            name: "n, p",
            reason: "both must be at least 1".into(),
        });
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "noise_sd",
            reason: format!("must be finite and >= 0, got {noise_sd}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..n * p).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let features = DMatrix::from_row_slice(n, p, &values);
    let w = DVector::from_column_slice(w0);
    let clean = &features * &w;
    let labels = DVector::from_fn(n, |i, _| {
        clean[i] + noise_sd * StandardFamily::Normal.draw(&mut rng)
    });
    Dataset::new(features, labels)
}

/// Per-column location and scale removed by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub feature_means: Vec<f64>,
    pub feature_sds: Vec<f64>,
    pub label_mean: f64,
    pub label_sd: f64,
}

impl Standardization {
    /// Map a standardized label back to original units.
    pub fn label_to_original(&self, z: f64) -> f64 {
        self.label_mean + self.label_sd * z
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// z-score every feature column and the label (population standard deviation).
pub fn standardize(data: &Dataset) -> Result<(Dataset, Standardization)> {
    let mut features = data.features.clone();
    let mut feature_means = Vec::with_capacity(data.dim());
    let mut feature_sds = Vec::with_capacity(data.dim());
    for (k, mut col) in features.column_iter_mut().enumerate() {
        let (m, s) = mean_sd(col.as_slice());
        if !(s > 0.0) {
            return Err(Error::ZeroVariance(data.column_names[k].clone()));
        }
        col.apply(|v| *v = (*v - m) / s);
        feature_means.push(m);
        feature_sds.push(s);
    }
    let (label_mean, label_sd) = mean_sd(data.labels.as_slice());
    if !(label_sd > 0.0) {
        return Err(Error::ZeroVariance(data.label_name.clone()));
    }
    let labels = data.labels.map(|v| (v - label_mean) / label_sd);
    let out = Dataset::with_names(
        features,
        labels,
        data.column_names.clone(),
        data.label_name.clone(),
    )?;
    Ok((
        out,
        Standardization {
            feature_means,
            feature_sds,
            label_mean,
            label_sd,
        },
    ))
}
