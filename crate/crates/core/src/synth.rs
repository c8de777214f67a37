//! Synthetic walker traces with analytically known gait parameters.
//!
//! Heel strikes are placed on integer frames; each strike contributes a
//! symmetric Gaussian bump to the inter-heel separation, so the signal's
//! maxima sit exactly on the strike frames and survive smoothing without
//! drifting (a bump's shape is decoupled from the asymmetric inter-strike
//! timing). All noiseless coordinates and the camera-jitter offsets are
//! quantized to a 2^-20 grid: common-mode jitter then cancels exactly in
//! coordinate differences, bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;
use crate::keypoints::{
    KeypointFrame, KeypointSequence, Landmark, Leg, SequenceMeta, DEFAULT_LANDMARK_COUNT,
};
use crate::signal::Role;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
}

/// Which way the walker faces along the x axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Facing {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
}

impl Facing {
    fn sign(self) -> f64 {
        match self {
            Facing::PosX => 1.0,
            Facing::NegX => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub subject_id: String,
    pub label: Option<String>,
    /// Step amplitudes in normalized units (the separation at a strike).
    pub step_len_left: f64,
    pub step_len_right: f64,
    /// Single-support durations: left period runs from a left strike to
    /// the next right strike.
    pub step_period_left_s: f64,
    pub step_period_right_s: f64,
    pub frame_rate_hz: f64,
    pub n_cycles: usize,
    pub facing: Facing,
    pub keypoint_noise_std: f64,
    pub camera_jitter_amp: f64,
    pub camera_jitter_period_s: f64,
    pub seed: u64,
    pub height_m: f64,
    pub orthotic_side: Leg,
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        SynthConfig {
            subject_id: "synth".into(),
            label: None,
            step_len_left: 0.25,
            step_len_right: 0.25,
            step_period_left_s: 0.55,
            step_period_right_s: 0.55,
            frame_rate_hz: 30.0,
            n_cycles: 3,
            facing: Facing::PosX,
            keypoint_noise_std: 0.0,
            camera_jitter_amp: 0.0,
            camera_jitter_period_s: 2.0,
            seed: 0,
            height_m: 1.7,
            orthotic_side: Leg::Left,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let positive = [
            ("step_len_left", self.step_len_left),
            ("step_len_right", self.step_len_right),
            ("step_period_left_s", self.step_period_left_s),
            ("step_period_right_s", self.step_period_right_s),
            ("frame_rate_hz", self.frame_rate_hz),
            ("height_m", self.height_m),
            ("camera_jitter_period_s", self.camera_jitter_period_s),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(SynthError::InvalidConfig(format!("{name} must be > 0")));
            }
        }
        if self.n_cycles == 0 {
            return Err(SynthError::InvalidConfig("n_cycles must be >= 1".into()));
        }
        if self.keypoint_noise_std < 0.0 || self.camera_jitter_amp < 0.0 {
            return Err(SynthError::InvalidConfig(
                "noise and jitter amplitudes must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Exact gait values realized by a generated walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFeatures {
    /// Mean feature vector over the walk's cycles.
    pub features: FeatureVector,
    pub per_cycle: Vec<FeatureVector>,
    pub maxima_frames: Vec<usize>,
    /// Noiseless inter-heel separation at each strike frame (after
    /// coordinate quantization).
    pub maxima_values: Vec<f64>,
    pub maxima_legs: Vec<Leg>,
}

const QUANT: f64 = 1.0 / (1u64 << 20) as f64;

fn quantize(v: f64) -> f64 {
    (v / QUANT).round() * QUANT
}

/// Constant body-landmark offsets relative to the torso column; the four
/// foot landmarks are animated separately.
fn body_offset(index: usize) -> (f64, f64) {
    match index {
        0..=10 => (0.01 * (index as f64 - 5.0) / 5.0, 0.14 + 0.01 * (index % 3) as f64),
        11 | 12 => (if index == 11 { 0.04 } else { -0.04 }, 0.30),
        13 | 14 => (if index == 13 { 0.06 } else { -0.06 }, 0.42),
        15..=22 => (0.02 * if index % 2 == 1 { 1.0 } else { -1.0 }, 0.52),
        23 | 24 => (if index == 23 { 0.03 } else { -0.03 }, 0.56),
        25 | 26 => (if index == 25 { 0.02 } else { -0.02 }, 0.72),
        27 | 28 => (0.0, 0.86),
        _ => (0.0, 0.92),
    }
}

struct Skeleton {
    frames: Vec<usize>,
    n_frames: usize,
    /// Noiseless quantized left/right heel x per frame.
    left_heel: Vec<f64>,
    right_heel: Vec<f64>,
}

fn build_skeleton(cfg: &SynthConfig) -> Skeleton {
    let fps = cfg.frame_rate_hz;
    let n_strikes = 2 * cfg.n_cycles + 1;

    // Strike times: alternate left/right supports, first strike = left.
    let mut t = 0.0;
    let mut times = vec![0.0];
    for k in 1..n_strikes {
        t += if k % 2 == 1 {
            cfg.step_period_left_s
        } else {
            cfg.step_period_right_s
        };
        times.push(t);
    }
    let min_period = cfg.step_period_left_s.min(cfg.step_period_right_s);
    let lead = ((0.7 * min_period * fps).round() as usize).max(6);
    let mut frames: Vec<usize> = times
        .iter()
        .map(|tt| (tt * fps).round() as usize + lead)
        .collect();
    for i in 1..frames.len() {
        if frames[i] < frames[i - 1] + 2 {
            frames[i] = frames[i - 1] + 2;
        }
    }
    let gaps: Vec<usize> = frames.windows(2).map(|w| w[1] - w[0]).collect();
    let n_frames = frames[frames.len() - 1] + lead + 1;

    // Separation: one symmetric bump per strike, alternating sign. The
    // bump (1 - s^2)^3 is compactly supported with one global half-width
    // of 0.8 x the smallest gap, so a neighboring bump is exactly zero
    // at (and one frame around) a strike frame: every maximum equals its
    // configured amplitude, and equal-amplitude configs come out equal
    // to the bit, 16/17-frame gap rounding notwithstanding.
    let width = 0.8 * *gaps.iter().min().expect("at least one gap") as f64;
    let mut u = vec![0.0f64; n_frames];
    for (k, &f) in frames.iter().enumerate() {
        let signed_amp = if k % 2 == 0 {
            cfg.step_len_left
        } else {
            -cfg.step_len_right
        };
        for (tt, slot) in u.iter_mut().enumerate() {
            let s = (tt as f64 - f as f64) / width;
            if s.abs() < 1.0 {
                let b = 1.0 - s * s;
                *slot += signed_amp * b * b * b;
            }
        }
    }

    let dir = cfg.facing.sign();
    let torso_x = 0.5;
    let left_heel: Vec<f64> = u.iter().map(|v| quantize(torso_x + dir * v / 2.0)).collect();
    let right_heel: Vec<f64> = u.iter().map(|v| quantize(torso_x - dir * v / 2.0)).collect();

    Skeleton {
        frames,
        n_frames,
        left_heel,
        right_heel,
    }
}

fn ground_truth(cfg: &SynthConfig, skel: &Skeleton) -> GroundTruthFeatures {
    let fps = cfg.frame_rate_hz;
    let height = cfg.height_m;

    let maxima_frames = skel.frames.clone();
    let maxima_values: Vec<f64> = skel
        .frames
        .iter()
        .map(|&f| (skel.left_heel[f] - skel.right_heel[f]).abs())
        .collect();
    let maxima_legs: Vec<Leg> = (0..skel.frames.len())
        .map(|k| if k % 2 == 0 { Leg::Left } else { Leg::Right })
        .collect();
    let role_of = |leg: Leg| if leg == cfg.orthotic_side { Role::Ol } else { Role::Nol };

    // Straight-line evaluation of the per-cycle feature formulas on the
    // analytic strike frames and amplitudes.
    let mut per_cycle = Vec::with_capacity(cfg.n_cycles);
    for j in 0..cfg.n_cycles {
        let idx = [2 * j, 2 * j + 1, 2 * j + 2];
        let f = idx.map(|i| maxima_frames[i] as f64);
        let m = idx.map(|i| maxima_values[i]);
        let roles = idx.map(|i| role_of(maxima_legs[i]));

        let mut ol_sum = 0.0;
        let mut ol_n = 0.0;
        let mut nol_sum = 0.0;
        let mut nol_n = 0.0;
        for (value, role) in m.iter().zip(&roles) {
            match role {
                Role::Ol => {
                    ol_sum += height * value;
                    ol_n += 1.0;
                }
                Role::Nol => {
                    nol_sum += height * value;
                    nol_n += 1.0;
                }
            }
        }
        let steps = m.map(|v| height * v);
        let stride = 0.5 * ((steps[0] + steps[1]) + (steps[1] + steps[2]));
        let d1 = (f[1] - f[0]) / fps;
        let d2 = (f[2] - f[1]) / fps;
        let (mut ss_ol, mut ss_nol) = (0.0, 0.0);
        match roles[0] {
            Role::Ol => ss_ol += d1,
            Role::Nol => ss_nol += d1,
        }
        match roles[1] {
            Role::Ol => ss_ol += d2,
            Role::Nol => ss_nol += d2,
        }
        let span = f[2] - f[0];
        per_cycle.push(FeatureVector {
            step_len_ol_m: if ol_n > 0.0 { ol_sum / ol_n } else { 0.0 },
            step_len_nol_m: if nol_n > 0.0 { nol_sum / nol_n } else { 0.0 },
            stride_len_m: stride,
            ss_ol_s: ss_ol,
            ss_nol_s: ss_nol,
            cadence_spm: 3.0 * 60.0 * fps / span,
            speed_mps: height * fps * (m[0] + m[1] + m[2]) / span,
        });
    }

    let n = per_cycle.len() as f64;
    let mut mean = [0.0; 7];
    for fv in &per_cycle {
        for (slot, v) in mean.iter_mut().zip(fv.as_array()) {
            *slot += v / n;
        }
    }

    GroundTruthFeatures {
        features: FeatureVector::from_array(mean),
        per_cycle,
        maxima_frames,
        maxima_values,
        maxima_legs,
    }
}

/// Generate a keypoint trace plus its analytic ground truth.
pub fn generate_walk(
    cfg: &SynthConfig,
) -> Result<(KeypointSequence, GroundTruthFeatures), SynthError> {
    cfg.validate()?;
    let skel = build_skeleton(cfg);
    let truth = ground_truth(cfg, &skel);

    let fps = cfg.frame_rate_hz;
    let dir = cfg.facing.sign();
    let torso_x = 0.5;
    let toe_offset = quantize(0.05 * dir);
    let jitter_frames = cfg.camera_jitter_period_s * fps;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = if cfg.keypoint_noise_std > 0.0 {
        Some(Normal::new(0.0, cfg.keypoint_noise_std).expect("validated std"))
    } else {
        None
    };

    let mut frames = Vec::with_capacity(skel.n_frames);
    for t in 0..skel.n_frames {
        let (jx, jy) = if cfg.camera_jitter_amp > 0.0 {
            let phase = 2.0 * std::f64::consts::PI * t as f64 / jitter_frames;
            (
                quantize(cfg.camera_jitter_amp * phase.sin()),
                quantize(0.3 * cfg.camera_jitter_amp * phase.cos()),
            )
        } else {
            (0.0, 0.0)
        };

        let lh = skel.left_heel[t];
        let rh = skel.right_heel[t];
        let mut landmarks = Vec::with_capacity(DEFAULT_LANDMARK_COUNT);
        for i in 0..DEFAULT_LANDMARK_COUNT {
            let (x0, y0) = match i {
                29 => (lh, 0.92),
                30 => (rh, 0.92),
                31 => (lh + toe_offset, 0.94),
                32 => (rh + toe_offset, 0.94),
                // Ankles ride on the heels; everything else is a fixed
                // offset from the torso column.
                27 => (lh, 0.86),
                28 => (rh, 0.86),
                _ => {
                    let (dx, dy) = body_offset(i);
                    (quantize(torso_x + dx), dy)
                }
            };
            let mut x = x0 + jx;
            let mut y = quantize(y0) + jy;
            if let Some(n) = &noise {
                x += n.sample(&mut rng);
                y += n.sample(&mut rng);
            }
            landmarks.push(Landmark { x, y, v: 0.98 });
        }
        frames.push(KeypointFrame { landmarks });
    }

    let seq = KeypointSequence {
        meta: SequenceMeta {
            subject_id: cfg.subject_id.clone(),
            height_m: cfg.height_m,
            frame_rate_hz: fps,
            orthotic_side: cfg.orthotic_side,
            label: cfg.label.clone(),
            landmark_map: SequenceMeta::default_landmark_map(),
        },
        frames,
    };
    Ok((seq, truth))
}
