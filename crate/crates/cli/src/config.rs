//! Config-file loading and flag merging. A config file is a JSON object
//! with optional `signal`, `train`, `svm`, `explain`, and `synth`
//! sections; command-line flags override file values, and the fully
//! resolved settings are echoed into every JSON report.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use gaitlab::explain::PerturbationConfig;
use gaitlab::mlp::TrainConfig;
use gaitlab::signal::SignalConfig;
use gaitlab::svm::SvmConfig;
use gaitlab::synth::SynthConfig;

/// Partial signal settings; anything unset falls back to the defaults
/// for the sequence's frame rate.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalOverrides {
    pub smoothing_sigma_frames: Option<f64>,
    pub min_prominence: Option<f64>,
    pub min_gap_fraction: Option<f64>,
}

impl SignalOverrides {
    pub fn merge_flags(
        &mut self,
        sigma: Option<f64>,
        min_prominence: Option<f64>,
        min_gap_fraction: Option<f64>,
    ) {
        if sigma.is_some() {
            self.smoothing_sigma_frames = sigma;
        }
        if min_prominence.is_some() {
            self.min_prominence = min_prominence;
        }
        if min_gap_fraction.is_some() {
            self.min_gap_fraction = min_gap_fraction;
        }
    }

    pub fn resolve(&self, frame_rate_hz: f64) -> SignalConfig {
        let mut cfg = SignalConfig::for_frame_rate(frame_rate_hz);
        if let Some(v) = self.smoothing_sigma_frames {
            cfg.smoothing_sigma_frames = v;
        }
        if let Some(v) = self.min_prominence {
            cfg.min_prominence = v;
        }
        if let Some(v) = self.min_gap_fraction {
            cfg.min_gap_fraction = v;
        }
        cfg
    }
}

/// The config file's sections; every section is optional and partial
/// (missing fields take their defaults).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub signal: SignalOverrides,
    pub train: Option<TrainConfig>,
    pub svm: Option<SvmConfig>,
    pub explain: Option<PerturbationConfig>,
    pub synth: Option<SynthConfig>,
}

pub fn load_config(path: Option<&std::path::Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config file {}", p.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config file {}", p.display()))
        }
    }
}
