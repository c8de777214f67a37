//! Local surrogate explanations for individual predictions.
//!
//! Around one instance, the classifier is probed with Gaussian
//! perturbations, each weighted by its similarity to the instance, and a
//! weighted ridge regression approximates the predicted-class
//! probability in standardized feature space. The fitted coefficients
//! are the per-feature importances; the weighted R² of the fit is the
//! surrogate's fidelity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Standardizer;
use crate::mlp::{MlpModel, Prediction};

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("invalid perturbation config: {0}")]
    InvalidConfig(String),
    #[error("instance has {got} features, expected {expected}")]
    ShapeMismatch { got: usize, expected: usize },
}

/// Perturbation and surrogate-fit settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationConfig {
    pub n_samples: usize,
    /// similarity kernel width in standardized-distance units.
    pub kernel_width: f64,
    pub ridge_lambda: f64,
    /// Importance above this counts as a positive contribution in tallies.
    pub contribution_threshold: f64,
    pub seed: u64,
}

impl Default for PerturbationConfig {
    fn default() -> PerturbationConfig {
        PerturbationConfig {
            n_samples: 1000,
            kernel_width: 0.75 * (7.0f64).sqrt(),
            ridge_lambda: 1e-3,
            contribution_threshold: 0.01,
            seed: 0,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<(), ExplainError> {
        if self.n_samples < 100 {
            return Err(ExplainError::InvalidConfig("n_samples must be >= 100".into()));
        }
        if !self.kernel_width.is_finite() || self.kernel_width <= 0.0 {
            return Err(ExplainError::InvalidConfig("kernel_width must be > 0".into()));
        }
        if self.ridge_lambda < 0.0 {
            return Err(ExplainError::InvalidConfig("ridge_lambda must be >= 0".into()));
        }
        Ok(())
    }
}

/// Anything the explainer can probe: a classifier exposing class
/// probabilities for a raw feature vector.
pub trait BlackBoxModel {
    fn n_features(&self) -> usize;
    fn class_names(&self) -> &[String];
    /// Class probabilities; `x.len()` is guaranteed to be `n_features()`.
    fn probabilities(&self, x: &[f64]) -> Vec<f64>;
}

impl BlackBoxModel for MlpModel {
    fn n_features(&self) -> usize {
        MlpModel::n_features(self)
    }

    fn class_names(&self) -> &[String] {
        &self.class_names
    }

    fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).expect("dimensions validated by explainer")
    }
}

/// Per-feature importances toward the predicted class for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub instance_id: String,
    pub predicted: Prediction,
    pub importances: Vec<f64>,
    pub intercept: f64,
    /// Weighted R² of the surrogate against the model; `None` when the
    /// model was constant over the perturbation set (undefined fit).
    pub fidelity_r2: Option<f64>,
}

/// How often each feature contributed positively over a corpus of
/// correctly classified instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionTally {
    pub feature_names: Vec<String>,
    pub positive_count: Vec<usize>,
    pub negative_count: Vec<usize>,
    pub n_correct: usize,
}

impl ContributionTally {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,positive_count,negative_count\n");
        for (i, name) in self.feature_names.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                name, self.positive_count[i], self.negative_count[i]
            ));
        }
        out
    }
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve_linear_system(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// Explain one prediction with a weighted ridge surrogate.
///
/// `train_stats` supplies the per-feature training mean/std: the raw std
/// drives the perturbation spread (a constant feature is not perturbed)
/// and the clamped std defines the standardized space for distances and
/// the fit.
pub fn explain_instance<M: BlackBoxModel>(
    model: &M,
    instance_id: &str,
    x: &[f64],
    train_stats: &Standardizer,
    cfg: &PerturbationConfig,
) -> Result<Explanation, ExplainError> {
    cfg.validate()?;
    let d = model.n_features();
    if x.len() != d || train_stats.len() != d {
        return Err(ExplainError::ShapeMismatch {
            got: x.len(),
            expected: d,
        });
    }

    let probs = model.probabilities(x);
    let mut pred_idx = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > probs[pred_idx] {
            pred_idx = i;
        }
    }
    let predicted = Prediction {
        class_index: pred_idx,
        label: model.class_names()[pred_idx].clone(),
        confidence: probs[pred_idx],
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let z_x = train_stats.transform(x);
    let kw2 = cfg.kernel_width * cfg.kernel_width;

    let n = cfg.n_samples;
    let mut z_rows = Vec::with_capacity(n);
    let mut responses = Vec::with_capacity(n);
    let mut kernel_weights = Vec::with_capacity(n);
    let mut perturbed = vec![0.0; d];
    for _ in 0..n {
        for j in 0..d {
            let std = train_stats.std[j];
            perturbed[j] = if std > 0.0 {
                Normal::new(x[j], std).expect("finite std").sample(&mut rng)
            } else {
                x[j]
            };
        }
        let z = train_stats.transform(&perturbed);
        let dist2: f64 = z.iter().zip(&z_x).map(|(a, b)| (a - b).powi(2)).sum();
        kernel_weights.push((-dist2 / kw2).exp());
        responses.push(model.probabilities(&perturbed)[pred_idx]);
        z_rows.push(z);
    }

    // Constant model output over the whole perturbation set: the fit is
    // undefined, importances are zero.
    let y_min = responses.iter().cloned().fold(f64::INFINITY, f64::min);
    let y_max = responses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if y_max - y_min < 1e-12 {
        return Ok(Explanation {
            instance_id: instance_id.to_string(),
            predicted,
            importances: vec![0.0; d],
            intercept: 0.5 * (y_min + y_max),
            fidelity_r2: None,
        });
    }

    // Weighted ridge normal equations over [intercept, beta_1..beta_d];
    // the intercept is unpenalized.
    let dim = d + 1;
    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    for ((z, &w), &y) in z_rows.iter().zip(&kernel_weights).zip(&responses) {
        a[0][0] += w;
        b[0] += w * y;
        for j in 0..d {
            a[0][j + 1] += w * z[j];
            a[j + 1][0] += w * z[j];
            b[j + 1] += w * z[j] * y;
            for k in 0..d {
                a[j + 1][k + 1] += w * z[j] * z[k];
            }
        }
    }
    for (j, row) in a.iter_mut().enumerate().skip(1) {
        row[j] += cfg.ridge_lambda;
    }
    let beta = solve_linear_system(a, b);

    let w_sum: f64 = kernel_weights.iter().sum();
    let y_bar: f64 = kernel_weights
        .iter()
        .zip(&responses)
        .map(|(w, y)| w * y)
        .sum::<f64>()
        / w_sum;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for ((z, &w), &y) in z_rows.iter().zip(&kernel_weights).zip(&responses) {
        let fit: f64 = beta[0] + z.iter().zip(&beta[1..]).map(|(v, c)| v * c).sum::<f64>();
        ss_res += w * (y - fit).powi(2);
        ss_tot += w * (y - y_bar).powi(2);
    }
    let fidelity = if ss_tot > 0.0 { Some(1.0 - ss_res / ss_tot) } else { None };

    Ok(Explanation {
        instance_id: instance_id.to_string(),
        predicted,
        importances: beta[1..].to_vec(),
        intercept: beta[0],
        fidelity_r2: fidelity,
    })
}

/// Count positive/negative contributions per feature over the correctly
/// classified instances; misclassified ones are excluded.
pub fn tally_contributions(
    explanations: &[Explanation],
    truth_labels: &[String],
    feature_names: &[String],
    threshold: f64,
) -> ContributionTally {
    assert_eq!(explanations.len(), truth_labels.len());
    let d = feature_names.len();
    let mut positive = vec![0usize; d];
    let mut negative = vec![0usize; d];
    let mut n_correct = 0;
    for (expl, truth) in explanations.iter().zip(truth_labels) {
        if &expl.predicted.label != truth {
            continue;
        }
        n_correct += 1;
        for j in 0..d {
            if expl.importances[j] > threshold {
                positive[j] += 1;
            } else {
                negative[j] += 1;
            }
        }
    }
    ContributionTally {
        feature_names: feature_names.to_vec(),
        positive_count: positive,
        negative_count: negative,
        n_correct,
    }
}
