//! Feed-forward MLP classifier trained with Adam on cross-entropy loss.
//!
//! The network is an input layer, ReLU hidden layers (64 units each by
//! default), and a softmax output. Inputs are z-scored with statistics
//! fitted on the training rows; training monitors a stratified holdout
//! and restores the best-validation weights. Everything is plain `f64`
//! and sequential, so a fixed seed reproduces training bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Standardizer};

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("input has {got} features, model expects {expected}")]
    ShapeMismatch { got: usize, expected: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub holdout_fraction: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub hidden_dims: Vec<usize>,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            learning_rate: 1e-5,
            max_epochs: 1000,
            early_stop_patience: 50,
            holdout_fraction: 0.1,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            hidden_dims: vec![64, 64],
            batch_size: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), MlpError> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(MlpError::InvalidConfig("learning_rate must be > 0".into()));
        }
        if !self.holdout_fraction.is_finite()
            || self.holdout_fraction <= 0.0
            || self.holdout_fraction >= 0.5
        {
            return Err(MlpError::InvalidConfig(
                "holdout_fraction must be in (0, 0.5)".into(),
            ));
        }
        if self.max_epochs == 0 {
            return Err(MlpError::InvalidConfig("max_epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// A classification with its softmax confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class_index: usize,
    pub label: String,
    pub confidence: f64,
}

/// Trained network: layer shapes, parameters, input standardizer, and
/// the training provenance (seed + config).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_dims: Vec<usize>,
    /// Per layer, row-major: `weights[l][out][in]`.
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    pub standardizer: Standardizer,
    pub class_names: Vec<String>,
    pub seed: u64,
    pub train_config: TrainConfig,
}

/// Gradients with the same shapes as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
}

/// How a training run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_monitor_loss: f64,
    /// Whether the monitor was a holdout (true) or the training loss
    /// because the stratified holdout rounded to zero rows (false).
    pub monitored_validation: bool,
    pub n_train: usize,
    pub n_val: usize,
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

impl MlpModel {
    pub fn n_features(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.layer_dims.last().expect("nonempty dims")
    }

    /// He-uniform initialized model with an identity standardizer;
    /// class names default to `c0..cK`.
    pub fn random(layer_dims: &[usize], seed: u64) -> MlpModel {
        assert!(layer_dims.len() >= 2, "need input and output layers");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (weights, biases) = init_params(layer_dims, &mut rng);
        let d = layer_dims[0];
        let c = *layer_dims.last().unwrap();
        MlpModel {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
            standardizer: Standardizer {
                mean: vec![0.0; d],
                std: vec![1.0; d],
            },
            class_names: (0..c).map(|k| format!("c{k}")).collect(),
            seed,
            train_config: TrainConfig::default(),
        }
    }

    fn logits_from_standardized(&self, z: &[f64]) -> Vec<f64> {
        let mut act = z.to_vec();
        let n_layers = self.weights.len();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut next = Vec::with_capacity(b.len());
            for (row, bias) in w.iter().zip(b) {
                let mut s = *bias;
                for (wi, ai) in row.iter().zip(&act) {
                    s += wi * ai;
                }
                next.push(if l + 1 < n_layers { relu(s) } else { s });
            }
            act = next;
        }
        act
    }

    /// Class probabilities for a raw (unstandardized) feature vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, MlpError> {
        if x.len() != self.n_features() {
            return Err(MlpError::ShapeMismatch {
                got: x.len(),
                expected: self.n_features(),
            });
        }
        let z = self.standardizer.transform(x);
        Ok(softmax(&self.logits_from_standardized(&z)))
    }

    /// Argmax prediction; ties go to the lower class index.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction, MlpError> {
        let probs = self.forward(x)?;
        let mut best = 0;
        for (i, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = i;
            }
        }
        Ok(Prediction {
            class_index: best,
            label: self.class_names[best].clone(),
            confidence: probs[best],
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<MlpModel, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn init_params(dims: &[usize], rng: &mut ChaCha8Rng) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>) {
    let mut weights = Vec::with_capacity(dims.len() - 1);
    let mut biases = Vec::with_capacity(dims.len() - 1);
    for l in 0..dims.len() - 1 {
        let fan_in = dims[l];
        let limit = (6.0 / fan_in as f64).sqrt();
        let layer: Vec<Vec<f64>> = (0..dims[l + 1])
            .map(|_| (0..fan_in).map(|_| rng.random_range(-limit..limit)).collect())
            .collect();
        weights.push(layer);
        biases.push(vec![0.0; dims[l + 1]]);
    }
    (weights, biases)
}

fn zeros_like(dims: &[usize]) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>) {
    let weights = (0..dims.len() - 1)
        .map(|l| vec![vec![0.0; dims[l]]; dims[l + 1]])
        .collect();
    let biases = (0..dims.len() - 1).map(|l| vec![0.0; dims[l + 1]]).collect();
    (weights, biases)
}

/// Mean cross-entropy and parameter gradients over standardized rows.
fn backprop_standardized(
    dims: &[usize],
    weights: &[Vec<Vec<f64>>],
    biases: &[Vec<f64>],
    z_rows: &[Vec<f64>],
    labels: &[usize],
) -> (f64, Gradients) {
    let n_layers = weights.len();
    let n = z_rows.len() as f64;
    let (mut gw, mut gb) = zeros_like(dims);
    let mut loss = 0.0;

    for (z, &y) in z_rows.iter().zip(labels) {
        // Forward pass keeping every activation.
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
        acts.push(z.clone());
        for l in 0..n_layers {
            let prev = &acts[l];
            let mut next = Vec::with_capacity(biases[l].len());
            for (row, bias) in weights[l].iter().zip(&biases[l]) {
                let mut s = *bias;
                for (wi, ai) in row.iter().zip(prev) {
                    s += wi * ai;
                }
                next.push(if l + 1 < n_layers { relu(s) } else { s });
            }
            acts.push(next);
        }

        let logits = &acts[n_layers];
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += (lse - logits[y]) / n;

        // delta at the output: (softmax - onehot) / n
        let mut delta: Vec<f64> = logits.iter().map(|v| (v - lse).exp() / n).collect();
        delta[y] -= 1.0 / n;

        for l in (0..n_layers).rev() {
            let prev = &acts[l];
            for (o, d) in delta.iter().enumerate() {
                gb[l][o] += d;
                for (i, a) in prev.iter().enumerate() {
                    gw[l][o][i] += d * a;
                }
            }
            if l > 0 {
                let mut prev_delta = vec![0.0; prev.len()];
                for (o, d) in delta.iter().enumerate() {
                    for (i, pd) in prev_delta.iter_mut().enumerate() {
                        *pd += weights[l][o][i] * d;
                    }
                }
                // ReLU gate: activation 0 means the unit was off.
                for (pd, a) in prev_delta.iter_mut().zip(prev) {
                    if *a <= 0.0 {
                        *pd = 0.0;
                    }
                }
                delta = prev_delta;
            }
        }
    }

    (loss, Gradients { weights: gw, biases: gb })
}

/// Mean cross-entropy loss and gradients for a batch of raw rows.
pub fn mlp_backprop(
    model: &MlpModel,
    rows: &[Vec<f64>],
    labels: &[usize],
) -> Result<(f64, Gradients), MlpError> {
    if rows.is_empty() {
        return Err(MlpError::EmptyDataset);
    }
    for r in rows {
        if r.len() != model.n_features() {
            return Err(MlpError::ShapeMismatch {
                got: r.len(),
                expected: model.n_features(),
            });
        }
    }
    let z_rows: Vec<Vec<f64>> = rows.iter().map(|r| model.standardizer.transform(r)).collect();
    Ok(backprop_standardized(
        &model.layer_dims,
        &model.weights,
        &model.biases,
        &z_rows,
        labels,
    ))
}

fn mean_ce_loss(
    weights: &[Vec<Vec<f64>>],
    biases: &[Vec<f64>],
    z_rows: &[Vec<f64>],
    labels: &[usize],
) -> f64 {
    let n_layers = weights.len();
    let mut loss = 0.0;
    for (z, &y) in z_rows.iter().zip(labels) {
        let mut act = z.clone();
        for l in 0..n_layers {
            let mut next = Vec::with_capacity(biases[l].len());
            for (row, bias) in weights[l].iter().zip(&biases[l]) {
                let mut s = *bias;
                for (wi, ai) in row.iter().zip(&act) {
                    s += wi * ai;
                }
                next.push(if l + 1 < n_layers { relu(s) } else { s });
            }
            act = next;
        }
        let max = act.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + act.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - act[y];
    }
    loss / z_rows.len() as f64
}

/// Stratified holdout split: per class, a seeded shuffle donates
/// `floor(fraction * n_class)` rows to validation.
fn stratified_split(
    labels: &[usize],
    n_classes: usize,
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for c in 0..n_classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        // Fisher-Yates with the shared seeded rng.
        for i in (1..idx.len()).rev() {
            let j = rng.random_range(0..=i);
            idx.swap(i, j);
        }
        let n_val = (fraction * idx.len() as f64).floor() as usize;
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Train an MLP on the dataset. Deterministic for a fixed seed.
pub fn train_mlp(data: &Dataset, cfg: &TrainConfig, seed: u64) -> Result<MlpModel, MlpError> {
    train_mlp_with_report(data, cfg, seed).map(|(model, _)| model)
}

/// As [`train_mlp`], also returning how the run ended.
pub fn train_mlp_with_report(
    data: &Dataset,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(MlpModel, TrainReport), MlpError> {
    cfg.validate()?;
    if data.n_rows() == 0 {
        return Err(MlpError::EmptyDataset);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = data.n_classes();
    let (train_idx, val_idx) = stratified_split(&data.labels, n_classes, cfg.holdout_fraction, &mut rng);

    let train_rows: Vec<Vec<f64>> = train_idx.iter().map(|&i| data.rows[i].clone()).collect();
    let train_labels: Vec<usize> = train_idx.iter().map(|&i| data.labels[i]).collect();
    let standardizer =
        Standardizer::fit(&train_rows).map_err(|_| MlpError::EmptyDataset)?;
    let z_train: Vec<Vec<f64>> = train_rows.iter().map(|r| standardizer.transform(r)).collect();
    let z_val: Vec<Vec<f64>> = val_idx
        .iter()
        .map(|&i| standardizer.transform(&data.rows[i]))
        .collect();
    let val_labels: Vec<usize> = val_idx.iter().map(|&i| data.labels[i]).collect();
    let monitored_validation = !z_val.is_empty();

    let dims: Vec<usize> = std::iter::once(data.n_features())
        .chain(cfg.hidden_dims.iter().copied())
        .chain(std::iter::once(n_classes))
        .collect();
    let (mut weights, mut biases) = init_params(&dims, &mut rng);
    let (mut m_w, mut m_b) = zeros_like(&dims);
    let (mut v_w, mut v_b) = zeros_like(&dims);

    let mut best_weights = weights.clone();
    let mut best_biases = biases.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut epochs_run = 0;
    let mut step = 0u32;

    let n_train = z_train.len();
    let batch = cfg.batch_size.unwrap_or(n_train).max(1);

    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;

        let mut order: Vec<usize> = (0..n_train).collect();
        if batch < n_train {
            for i in (1..order.len()).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
        }

        for chunk in order.chunks(batch) {
            let bz: Vec<Vec<f64>> = chunk.iter().map(|&i| z_train[i].clone()).collect();
            let bl: Vec<usize> = chunk.iter().map(|&i| train_labels[i]).collect();
            let (_, grads) = backprop_standardized(&dims, &weights, &biases, &bz, &bl);

            step += 1;
            let t = step as i32;
            let bc1 = 1.0 - cfg.adam_beta1.powi(t);
            let bc2 = 1.0 - cfg.adam_beta2.powi(t);
            for l in 0..weights.len() {
                for o in 0..weights[l].len() {
                    for i in 0..weights[l][o].len() {
                        let g = grads.weights[l][o][i];
                        m_w[l][o][i] = cfg.adam_beta1 * m_w[l][o][i] + (1.0 - cfg.adam_beta1) * g;
                        v_w[l][o][i] = cfg.adam_beta2 * v_w[l][o][i] + (1.0 - cfg.adam_beta2) * g * g;
                        let m_hat = m_w[l][o][i] / bc1;
                        let v_hat = v_w[l][o][i] / bc2;
                        weights[l][o][i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
                    }
                    let g = grads.biases[l][o];
                    m_b[l][o] = cfg.adam_beta1 * m_b[l][o] + (1.0 - cfg.adam_beta1) * g;
                    v_b[l][o] = cfg.adam_beta2 * v_b[l][o] + (1.0 - cfg.adam_beta2) * g * g;
                    let m_hat = m_b[l][o] / bc1;
                    let v_hat = v_b[l][o] / bc2;
                    biases[l][o] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
                }
            }
        }

        let monitor = if monitored_validation {
            mean_ce_loss(&weights, &biases, &z_val, &val_labels)
        } else {
            mean_ce_loss(&weights, &biases, &z_train, &train_labels)
        };
        if monitor < best_loss {
            best_loss = monitor;
            best_weights = weights.clone();
            best_biases = biases.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.early_stop_patience {
                break;
            }
        }
    }

    let model = MlpModel {
        layer_dims: dims,
        weights: best_weights,
        biases: best_biases,
        standardizer,
        class_names: data.class_names.clone(),
        seed,
        train_config: cfg.clone(),
    };
    let report = TrainReport {
        epochs_run,
        best_epoch,
        best_monitor_loss: best_loss,
        monitored_validation,
        n_train,
        n_val: z_val.len(),
    };
    Ok((model, report))
}
