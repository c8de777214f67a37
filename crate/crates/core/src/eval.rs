//! Subject-exclusive stratified k-fold evaluation of the MLP against the
//! linear-SVM baseline.
//!
//! Subjects, not rows, are partitioned into folds: a subject's gait
//! cycles all land in the same fold so no participant appears in both a
//! training and its validation set. Class balance across folds is
//! best-effort greedy packing; with few subjects exact stratification is
//! impossible and subject exclusivity wins.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::mlp::{train_mlp, MlpError, TrainConfig};
use crate::svm::{train_linear_svm, SvmConfig, SvmError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k-fold needs at least 2 folds, got {0}")]
    BadK(usize),
    #[error("{subjects} distinct subjects cannot fill {k} folds")]
    TooFewSubjects { subjects: usize, k: usize },
    #[error("mlp training failed: {0}")]
    Mlp(#[from] MlpError),
    #[error("svm training failed: {0}")]
    Svm(#[from] SvmError),
}

/// Row-index split for one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train_row_ids: Vec<usize>,
    pub val_row_ids: Vec<usize>,
}

/// Partition subjects into k folds, greedily balancing per-fold class
/// counts (largest subject first). Deterministic for a fixed seed.
pub fn subject_group_kfold(
    data: &Dataset,
    k: usize,
    seed: u64,
) -> Result<Vec<FoldSplit>, EvalError> {
    if k < 2 {
        return Err(EvalError::BadK(k));
    }

    // Rows per subject, and per-class row counts per subject.
    let n_classes = data.n_classes().max(1);
    let mut subjects: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, sid) in data.subject_ids.iter().enumerate() {
        let entry = subjects
            .entry(sid.as_str())
            .or_insert_with(|| (Vec::new(), vec![0; n_classes]));
        entry.0.push(i);
        entry.1[data.labels[i]] += 1;
    }
    if subjects.len() < k {
        return Err(EvalError::TooFewSubjects {
            subjects: subjects.len(),
            k,
        });
    }

    // Seeded shuffle, then a stable sort by size so equally sized
    // subjects keep a seed-dependent order.
    let mut order: Vec<(&str, Vec<usize>, Vec<usize>)> = subjects
        .into_iter()
        .map(|(sid, (rows, counts))| (sid, rows, counts))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    order.sort_by_key(|(_, rows, _)| std::cmp::Reverse(rows.len()));

    // Greedy packing: put each subject where it least skews the
    // per-class fold loads (sum of squared class counts).
    let mut fold_rows: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut fold_counts: Vec<Vec<usize>> = vec![vec![0; n_classes]; k];
    for (_, rows, counts) in order {
        let mut best = 0;
        let mut best_score = f64::INFINITY;
        for (f, fc) in fold_counts.iter().enumerate() {
            let score: f64 = fc
                .iter()
                .zip(&counts)
                .map(|(&have, &add)| {
                    let v = (have + add) as f64;
                    v * v
                })
                .sum();
            if score < best_score {
                best_score = score;
                best = f;
            }
        }
        fold_rows[best].extend_from_slice(&rows);
        for (c, add) in fold_counts[best].iter_mut().zip(&counts) {
            *c += add;
        }
    }

    let all: Vec<usize> = (0..data.n_rows()).collect();
    let splits = fold_rows
        .into_iter()
        .enumerate()
        .map(|(fold_index, mut val)| {
            val.sort_unstable();
            let train: Vec<usize> = all.iter().copied().filter(|i| !val.contains(i)).collect();
            FoldSplit {
                fold_index,
                train_row_ids: train,
                val_row_ids: val,
            }
        })
        .collect();
    Ok(splits)
}

/// One fold's outcome for both systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold_index: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub mlp_accuracy: f64,
    pub svm_accuracy: f64,
}

/// Table-style row: system name and its mean accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRow {
    pub system: String,
    pub accuracy: f64,
}

/// Cross-validation report with per-system mean accuracies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    pub mlp_mean_accuracy: f64,
    pub svm_mean_accuracy: f64,
    /// Gait cycles dropped upstream during signal processing.
    pub discarded_cycles: usize,
    pub systems: Vec<SystemRow>,
}

impl EvalReport {
    /// Comparison-table CSV: one `system,accuracy` row per system.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("system,accuracy\n");
        for row in &self.systems {
            out.push_str(&format!("{},{}\n", row.system, row.accuracy));
        }
        out
    }
}

const SYSTEM_MLP: &str = "Proposed system";
const SYSTEM_SVM: &str = "Proposed Features+SVM";

/// Train and score both systems across subject-exclusive folds.
///
/// Fold f trains with seed `seed + f` so folds are independent but the
/// whole evaluation stays deterministic.
pub fn run_evaluation(
    data: &Dataset,
    train_cfg: &TrainConfig,
    k: usize,
    seed: u64,
    discarded_cycles: usize,
) -> Result<EvalReport, EvalError> {
    let splits = subject_group_kfold(data, k, seed)?;
    let svm_cfg = SvmConfig::default();

    let mut folds = Vec::with_capacity(k);
    for split in &splits {
        let train = data.subset(&split.train_row_ids);
        let val = data.subset(&split.val_row_ids);
        let fold_seed = seed.wrapping_add(split.fold_index as u64);

        let mlp = train_mlp(&train, train_cfg, fold_seed)?;
        let svm = train_linear_svm(&train, &svm_cfg, fold_seed)?;

        let mut mlp_hits = 0usize;
        let mut svm_hits = 0usize;
        for (row, &label) in val.rows.iter().zip(&val.labels) {
            if mlp.predict(row).map_err(EvalError::Mlp)?.class_index == label {
                mlp_hits += 1;
            }
            if svm.predict(row).map_err(EvalError::Svm)?.class_index == label {
                svm_hits += 1;
            }
        }
        let n_val = val.n_rows();
        folds.push(FoldResult {
            fold_index: split.fold_index,
            n_train: train.n_rows(),
            n_val,
            mlp_accuracy: if n_val > 0 { mlp_hits as f64 / n_val as f64 } else { 0.0 },
            svm_accuracy: if n_val > 0 { svm_hits as f64 / n_val as f64 } else { 0.0 },
        });
    }

    let mean = |get: fn(&FoldResult) -> f64| -> f64 {
        folds.iter().map(get).sum::<f64>() / folds.len() as f64
    };
    let mlp_mean = mean(|f| f.mlp_accuracy);
    let svm_mean = mean(|f| f.svm_accuracy);

    Ok(EvalReport {
        k,
        seed,
        folds,
        mlp_mean_accuracy: mlp_mean,
        svm_mean_accuracy: svm_mean,
        discarded_cycles,
        systems: vec![
            SystemRow {
                system: SYSTEM_MLP.to_string(),
                accuracy: mlp_mean,
            },
            SystemRow {
                system: SYSTEM_SVM.to_string(),
                accuracy: svm_mean,
            },
        ],
    })
}
