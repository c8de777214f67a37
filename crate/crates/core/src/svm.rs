//! Linear SVM baseline fit by subgradient descent on L2-regularized
//! hinge loss over standardized features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Standardizer};
use crate::mlp::Prediction;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("linear SVM needs exactly 2 classes present, got {0}")]
    NotBinary(usize),
    #[error("input has {got} features, model expects {expected}")]
    ShapeMismatch { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> SvmConfig {
        SvmConfig {
            lambda: 1e-3,
            epochs: 2000,
        }
    }
}

/// Trained linear decision rule: sign(w . z + b) in standardized space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub standardizer: Standardizer,
    /// `class_names[0]` is the negative class, `class_names[1]` positive.
    pub class_names: Vec<String>,
    pub seed: u64,
    pub config: SvmConfig,
}

impl SvmModel {
    pub fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.weights.len() {
            return Err(SvmError::ShapeMismatch {
                got: x.len(),
                expected: self.weights.len(),
            });
        }
        let z = self.standardizer.transform(x);
        Ok(self.weights.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>() + self.bias)
    }

    /// Positive decision values map to class 1; ties go to class 0.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction, SvmError> {
        let dec = self.decision_value(x)?;
        let class_index = if dec > 0.0 { 1 } else { 0 };
        Ok(Prediction {
            class_index,
            label: self.class_names[class_index].clone(),
            confidence: 1.0 / (1.0 + (-dec.abs()).exp()),
        })
    }
}

/// Fit the baseline SVM. Deterministic for a fixed seed.
pub fn train_linear_svm(data: &Dataset, cfg: &SvmConfig, seed: u64) -> Result<SvmModel, SvmError> {
    let mut present: Vec<usize> = data.labels.clone();
    present.sort_unstable();
    present.dedup();
    if present.len() != 2 || data.class_names.len() != 2 {
        return Err(SvmError::NotBinary(present.len()));
    }

    let standardizer = Standardizer::fit(&data.rows).expect("nonempty by binary check");
    let z: Vec<Vec<f64>> = data.rows.iter().map(|r| standardizer.transform(r)).collect();
    // Class index 0 -> -1, class index 1 -> +1.
    let y: Vec<f64> = data
        .labels
        .iter()
        .map(|&l| if l == present[1] { 1.0 } else { -1.0 })
        .collect();

    let d = data.n_features();
    let n = z.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<f64> = (0..d).map(|_| rng.random_range(-1e-3..1e-3)).collect();
    let mut b = 0.0;

    for t in 1..=cfg.epochs {
        let eta = 1.0 / (cfg.lambda * t as f64);
        let mut grad_w: Vec<f64> = w.iter().map(|wi| cfg.lambda * wi).collect();
        let mut grad_b = 0.0;
        for (zi, yi) in z.iter().zip(&y) {
            let margin = yi * (w.iter().zip(zi).map(|(a, b)| a * b).sum::<f64>() + b);
            if margin < 1.0 {
                for (g, v) in grad_w.iter_mut().zip(zi) {
                    *g -= yi * v / n;
                }
                grad_b -= yi / n;
            }
        }
        for (wi, g) in w.iter_mut().zip(&grad_w) {
            *wi -= eta * g;
        }
        b -= eta * grad_b;
    }

    Ok(SvmModel {
        weights: w,
        bias: b,
        standardizer,
        class_names: data.class_names.clone(),
        seed,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(n_per_class: usize, margin: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..2usize {
            for _ in 0..n_per_class {
                let center = if c == 0 { 0.0 } else { margin };
                rows.push((0..7).map(|_| center + normal.sample(&mut rng)).collect());
                labels.push(c);
            }
        }
        let n = rows.len();
        Dataset {
            rows,
            labels,
            class_names: vec!["A".into(), "B".into()],
            subject_ids: (0..n).map(|i| format!("s{}", i % 5)).collect(),
            row_ids: (0..n).map(|i| format!("r{i}")).collect(),
        }
    }

    #[test]
    fn separable_blobs_reach_full_training_accuracy() {
        let data = blobs(40, 5.0, 3);
        let model = train_linear_svm(&data, &SvmConfig::default(), 7).unwrap();
        let correct = data
            .rows
            .iter()
            .zip(&data.labels)
            .filter(|(x, &y)| model.predict(x).unwrap().class_index == y)
            .count();
        assert_eq!(correct, data.n_rows());
    }

    #[test]
    fn single_class_is_not_binary() {
        let mut data = blobs(10, 1.0, 1);
        data.labels = vec![0; data.n_rows()];
        assert!(matches!(
            train_linear_svm(&data, &SvmConfig::default(), 1),
            Err(SvmError::NotBinary(1))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let data = blobs(15, 2.0, 9);
        let a = train_linear_svm(&data, &SvmConfig::default(), 5).unwrap();
        let b = train_linear_svm(&data, &SvmConfig::default(), 5).unwrap();
        assert_eq!(a, b);
    }
}
