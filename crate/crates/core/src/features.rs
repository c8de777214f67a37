//! The seven spatio-temporal gait features computed from one gait cycle.
//!
//! Step lengths come from the maxima amplitudes scaled by subject height;
//! durations from inter-maxima frame spans scaled by the frame rate.
//! Speed and cadence are computed verbatim over the cycle's shared
//! (frame3 - frame1) span, including its slightly unusual 3-step
//! numerator, rather than being dimensionally "corrected".

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{GaitCycle, Role};

/// Canonical feature ordering used by every CSV, report, and model input.
pub const FEATURE_NAMES: [&str; 7] = [
    "step_len_ol_m",
    "step_len_nol_m",
    "stride_len_m",
    "ss_ol_s",
    "ss_nol_s",
    "cadence_spm",
    "speed_mps",
];

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("degenerate cycle: first and last maxima share frame {0}")]
    DegenerateCycle(usize),
}

/// The seven features of one gait cycle, in fixed units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub step_len_ol_m: f64,
    pub step_len_nol_m: f64,
    pub stride_len_m: f64,
    pub ss_ol_s: f64,
    pub ss_nol_s: f64,
    pub cadence_spm: f64,
    pub speed_mps: f64,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; 7] {
        [
            self.step_len_ol_m,
            self.step_len_nol_m,
            self.stride_len_m,
            self.ss_ol_s,
            self.ss_nol_s,
            self.cadence_spm,
            self.speed_mps,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> FeatureVector {
        FeatureVector {
            step_len_ol_m: a[0],
            step_len_nol_m: a[1],
            stride_len_m: a[2],
            ss_ol_s: a[3],
            ss_nol_s: a[4],
            cadence_spm: a[5],
            speed_mps: a[6],
        }
    }

    /// All fields finite and nonnegative, stride within its construction
    /// bound of the step lengths.
    pub fn is_sane(&self) -> bool {
        let a = self.as_array();
        a.iter().all(|v| v.is_finite() && *v >= 0.0)
            && self.stride_len_m
                <= self.step_len_ol_m
                    + self.step_len_nol_m
                    + self.step_len_ol_m.max(self.step_len_nol_m)
                    + 1e-12
    }
}

/// Step length in meters per role: height x maxima amplitude, averaged
/// over the cycle's maxima of that role.
pub fn step_lengths(cycle: &GaitCycle, height_m: f64) -> (f64, f64) {
    let mut ol_sum = 0.0;
    let mut ol_n = 0.0;
    let mut nol_sum = 0.0;
    let mut nol_n = 0.0;
    for m in &cycle.maxima {
        let step = height_m * m.value;
        match m.role {
            Role::Ol => {
                ol_sum += step;
                ol_n += 1.0;
            }
            Role::Nol => {
                nol_sum += step;
                nol_n += 1.0;
            }
        }
    }
    (
        if ol_n > 0.0 { ol_sum / ol_n } else { 0.0 },
        if nol_n > 0.0 { nol_sum / nol_n } else { 0.0 },
    )
}

/// Mean of the cycle's two strides, each the sum of two consecutive
/// step lengths.
pub fn avg_stride_length(cycle: &GaitCycle, height_m: f64) -> f64 {
    let s: Vec<f64> = cycle.values().iter().map(|v| height_m * v).collect();
    let stride_a = s[0] + s[1];
    let stride_b = s[1] + s[2];
    0.5 * (stride_a + stride_b)
}

/// Single-support durations in seconds, attributed to the leg that
/// struck at the interval's opening maximum.
pub fn single_support(cycle: &GaitCycle, frame_rate_hz: f64) -> (f64, f64) {
    let [f1, f2, f3] = cycle.frames();
    let first = (f2 - f1) as f64 / frame_rate_hz;
    let second = (f3 - f2) as f64 / frame_rate_hz;

    let mut ol = 0.0;
    let mut nol = 0.0;
    match cycle.maxima[0].role {
        Role::Ol => ol += first,
        Role::Nol => nol += first,
    }
    match cycle.maxima[1].role {
        Role::Ol => ol += second,
        Role::Nol => nol += second,
    }
    (ol, nol)
}

/// Speed in m/s: height x frame rate x (sum of the three maxima) over
/// the (frame3 - frame1) span.
pub fn gait_speed(cycle: &GaitCycle, height_m: f64, frame_rate_hz: f64) -> Result<f64, FeatureError> {
    let [f1, _, f3] = cycle.frames();
    if f3 == f1 {
        return Err(FeatureError::DegenerateCycle(f1));
    }
    let m_sum: f64 = cycle.values().iter().sum();
    Ok(height_m * frame_rate_hz * m_sum / (f3 - f1) as f64)
}

/// Cadence in steps/minute: three steps over the (frame3 - frame1) span,
/// extrapolated to a minute.
pub fn gait_cadence(cycle: &GaitCycle, frame_rate_hz: f64) -> Result<f64, FeatureError> {
    let [f1, _, f3] = cycle.frames();
    if f3 == f1 {
        return Err(FeatureError::DegenerateCycle(f1));
    }
    Ok(3.0 * 60.0 * frame_rate_hz / (f3 - f1) as f64)
}

/// Assemble all seven features for one cycle.
pub fn feature_vector(cycle: &GaitCycle) -> Result<FeatureVector, FeatureError> {
    let height = cycle.meta.height_m;
    let fps = cycle.meta.frame_rate_hz;
    let (step_ol, step_nol) = step_lengths(cycle, height);
    let stride = avg_stride_length(cycle, height);
    let (ss_ol, ss_nol) = single_support(cycle, fps);
    let speed = gait_speed(cycle, height, fps)?;
    let cadence = gait_cadence(cycle, fps)?;
    Ok(FeatureVector {
        step_len_ol_m: step_ol,
        step_len_nol_m: step_nol,
        stride_len_m: stride,
        ss_ol_s: ss_ol,
        ss_nol_s: ss_nol,
        cadence_spm: cadence,
        speed_mps: speed,
    })
}
