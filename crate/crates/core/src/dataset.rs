//! Feature tables (the CSV exchange format), training datasets, and the
//! z-score standardizer shared by the classifiers and the explainer.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureVector, FEATURE_NAMES};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("feature CSV error: {0}")]
    Csv(String),
    #[error("feature CSV header mismatch: expected `{expected}`, got `{got}`")]
    HeaderMismatch { expected: String, got: String },
    #[error("row {0}: {1}")]
    Row(usize, String),
    #[error("row {0} has no label; training and evaluation need labeled rows")]
    UnlabeledRow(usize),
    #[error("non-finite feature value in row {0}")]
    NonFinite(usize),
}

/// One row of the feature CSV: a gait cycle with provenance ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub subject_id: String,
    pub cycle_id: String,
    pub features: FeatureVector,
    pub label: Option<String>,
}

/// A parsed feature CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
}

fn expected_header() -> String {
    let mut cols = vec!["subject_id", "cycle_id"];
    cols.extend(FEATURE_NAMES);
    cols.push("label");
    cols.join(",")
}

impl FeatureTable {
    /// Render the table in the canonical 10-column CSV layout; the label
    /// column is empty when unknown.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(expected_header().split(',')).expect("csv header");
        for row in &self.rows {
            let f = row.features.as_array();
            let mut rec: Vec<String> = vec![row.subject_id.clone(), row.cycle_id.clone()];
            rec.extend(f.iter().map(|v| v.to_string()));
            rec.push(row.label.clone().unwrap_or_default());
            w.write_record(&rec).expect("csv row");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
    }

    pub fn from_csv(text: &str) -> Result<FeatureTable, DatasetError> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let got = r
            .headers()
            .map_err(|e| DatasetError::Csv(e.to_string()))?
            .iter()
            .collect::<Vec<_>>()
            .join(",");
        if got != expected_header() {
            return Err(DatasetError::HeaderMismatch {
                expected: expected_header(),
                got,
            });
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| DatasetError::Row(i, e.to_string()))?;
            if rec.len() != 10 {
                return Err(DatasetError::Row(i, format!("expected 10 columns, got {}", rec.len())));
            }
            let mut f = [0.0f64; 7];
            for (j, slot) in f.iter_mut().enumerate() {
                *slot = rec[j + 2]
                    .parse()
                    .map_err(|e| DatasetError::Row(i, format!("column {}: {e}", FEATURE_NAMES[j])))?;
                if !slot.is_finite() {
                    return Err(DatasetError::NonFinite(i));
                }
            }
            let label = if rec[9].is_empty() { None } else { Some(rec[9].to_string()) };
            rows.push(FeatureRow {
                subject_id: rec[0].to_string(),
                cycle_id: rec[1].to_string(),
                features: FeatureVector::from_array(f),
                label,
            });
        }
        Ok(FeatureTable { rows })
    }

    /// Convert to a training dataset; every row must carry a label.
    pub fn to_dataset(&self) -> Result<Dataset, DatasetError> {
        if self.rows.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        let class_names: Vec<String> = self
            .rows
            .iter()
            .map(|r| r.label.clone())
            .collect::<Option<BTreeSet<String>>>()
            .ok_or_else(|| {
                let idx = self.rows.iter().position(|r| r.label.is_none()).unwrap_or(0);
                DatasetError::UnlabeledRow(idx)
            })?
            .into_iter()
            .collect();

        let mut rows = Vec::with_capacity(self.rows.len());
        let mut labels = Vec::with_capacity(self.rows.len());
        let mut subject_ids = Vec::with_capacity(self.rows.len());
        let mut row_ids = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            rows.push(r.features.as_array().to_vec());
            let label = r.label.as_ref().expect("checked above");
            labels.push(class_names.iter().position(|c| c == label).expect("known class"));
            subject_ids.push(r.subject_id.clone());
            row_ids.push(r.cycle_id.clone());
        }
        Ok(Dataset {
            rows,
            labels,
            class_names,
            subject_ids,
            row_ids,
        })
    }
}

/// Labeled feature matrix with per-row subject grouping keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// n x d feature matrix.
    pub rows: Vec<Vec<f64>>,
    /// Class index per row, into `class_names`.
    pub labels: Vec<usize>,
    /// Ordered (lexicographic) class labels.
    pub class_names: Vec<String>,
    /// Grouping key per row; folds never split a subject.
    pub subject_ids: Vec<String>,
    /// Identifier per row (cycle id).
    pub row_ids: Vec<String>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.rows.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Row subset preserving class names and ordering.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            subject_ids: indices.iter().map(|&i| self.subject_ids[i].clone()).collect(),
            row_ids: indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
        }
    }
}

/// Per-feature z-scoring fitted on training rows.
///
/// `std` stores the raw population standard deviation; division clamps a
/// zero std to 1 so constant features pass through centered instead of
/// dividing by zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Standardizer, DatasetError> {
        if rows.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; d];
        for row in rows {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                let dev = v - m;
                *s += dev * dev;
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Standardizer { mean, std })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Division scale for feature `j`: raw std, clamped to 1 when zero.
    pub fn scale(&self, j: usize) -> f64 {
        if self.std[j] > 0.0 {
            self.std[j]
        } else {
            1.0
        }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| (v - self.mean[j]) / self.scale(j))
            .collect()
    }
}
