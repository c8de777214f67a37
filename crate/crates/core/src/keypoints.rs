//! Pose-trace ingestion: parsing, validation, and heel/toe series extraction.
//!
//! A pose trace is a JSON document holding subject metadata and per-frame
//! landmark coordinates in the pose estimator's normalized (0,1) space.
//! The rest of the pipeline only consumes the horizontal coordinates of
//! the heel and foot-tip landmarks, extracted here as [`HeelSeries`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Landmark indices of the default 33-landmark pose topology.
pub const DEFAULT_LANDMARK_COUNT: usize = 33;
const DEFAULT_LEFT_HEEL: usize = 29;
const DEFAULT_RIGHT_HEEL: usize = 30;
const DEFAULT_LEFT_FOOT_INDEX: usize = 31;
const DEFAULT_RIGHT_FOOT_INDEX: usize = 32;

pub const LANDMARK_LEFT_HEEL: &str = "left_heel";
pub const LANDMARK_RIGHT_HEEL: &str = "right_heel";
pub const LANDMARK_LEFT_FOOT_INDEX: &str = "left_foot_index";
pub const LANDMARK_RIGHT_FOOT_INDEX: &str = "right_foot_index";

#[derive(Debug, Error)]
pub enum KeypointError {
    #[error("malformed pose-trace document: {0}")]
    MalformedDocument(String),
    #[error("missing required metadata field `{0}`")]
    MissingMeta(&'static str),
    #[error("inconsistent landmark count: frame {frame} has {got}, expected {expected}")]
    InconsistentLandmarkCount {
        frame: usize,
        got: usize,
        expected: usize,
    },
    #[error("landmark `{0}` cannot be resolved by the landmark map")]
    MissingLandmark(String),
    #[error("invalid metadata: {0}")]
    InvalidMeta(String),
}

/// Side of the body, also used to tag which leg wears the orthosis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    Left,
    Right,
}

impl Leg {
    pub fn opposite(self) -> Leg {
        match self {
            Leg::Left => Leg::Right,
            Leg::Right => Leg::Left,
        }
    }
}

impl std::fmt::Display for Leg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Leg::Left => write!(f, "left"),
            Leg::Right => write!(f, "right"),
        }
    }
}

/// Subject and acquisition metadata attached to a keypoint sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub subject_id: String,
    pub height_m: f64,
    pub frame_rate_hz: f64,
    pub orthotic_side: Leg,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Name -> landmark index; defaults to the 33-landmark convention.
    pub landmark_map: BTreeMap<String, usize>,
}

impl SequenceMeta {
    pub fn default_landmark_map() -> BTreeMap<String, usize> {
        BTreeMap::from([
            (LANDMARK_LEFT_HEEL.to_string(), DEFAULT_LEFT_HEEL),
            (LANDMARK_RIGHT_HEEL.to_string(), DEFAULT_RIGHT_HEEL),
            (LANDMARK_LEFT_FOOT_INDEX.to_string(), DEFAULT_LEFT_FOOT_INDEX),
            (
                LANDMARK_RIGHT_FOOT_INDEX.to_string(),
                DEFAULT_RIGHT_FOOT_INDEX,
            ),
        ])
    }

    fn landmark(&self, name: &str) -> Result<usize, KeypointError> {
        self.landmark_map
            .get(name)
            .copied()
            .ok_or_else(|| KeypointError::MissingLandmark(name.to_string()))
    }

    fn check(&self, landmark_count: usize) -> Result<(), KeypointError> {
        if !self.height_m.is_finite() || self.height_m <= 0.0 {
            return Err(KeypointError::InvalidMeta(
                "height_m must be strictly positive".into(),
            ));
        }
        if !self.frame_rate_hz.is_finite() || self.frame_rate_hz <= 0.0 {
            return Err(KeypointError::InvalidMeta(
                "frame_rate_hz must be strictly positive".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (name, &idx) in &self.landmark_map {
            if idx >= landmark_count {
                return Err(KeypointError::InvalidMeta(format!(
                    "landmark `{name}` index {idx} outside landmark count {landmark_count}"
                )));
            }
            if !seen.insert(idx) {
                return Err(KeypointError::InvalidMeta(format!(
                    "landmark map indices not distinct (duplicate {idx})"
                )));
            }
        }
        Ok(())
    }
}

/// One landmark observation: normalized coordinates plus visibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub x: f64,
    pub y: f64,
    pub v: f64,
}

/// All landmarks of one video frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeypointFrame {
    pub landmarks: Vec<Landmark>,
}

/// A parsed pose trace: metadata plus the ordered frame list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointSequence {
    #[serde(flatten)]
    pub meta: SequenceMeta,
    pub frames: Vec<KeypointFrame>,
}

/// Horizontal heel and foot-tip coordinate series extracted from a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct HeelSeries {
    pub left_heel_x: Vec<f64>,
    pub right_heel_x: Vec<f64>,
    pub left_toe_x: Vec<f64>,
    pub right_toe_x: Vec<f64>,
    pub meta: SequenceMeta,
}

impl HeelSeries {
    pub fn len(&self) -> usize {
        self.left_heel_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left_heel_x.is_empty()
    }
}

// Mirror of the on-disk schema; landmark_map and label are optional there.
#[derive(Deserialize)]
struct RawDoc {
    subject_id: Option<String>,
    height_m: Option<f64>,
    frame_rate_hz: Option<f64>,
    orthotic_side: Option<Leg>,
    label: Option<String>,
    landmark_map: Option<BTreeMap<String, usize>>,
    frames: Option<Vec<Vec<Landmark>>>,
}

/// Parse a pose-trace JSON document into a [`KeypointSequence`].
///
/// Metadata and coordinates are preserved exactly; a missing
/// `landmark_map` defaults to the 33-landmark convention.
pub fn parse_pose_trace(doc: &[u8]) -> Result<KeypointSequence, KeypointError> {
    let raw: RawDoc = serde_json::from_slice(doc)
        .map_err(|e| KeypointError::MalformedDocument(e.to_string()))?;

    let subject_id = raw.subject_id.ok_or(KeypointError::MissingMeta("subject_id"))?;
    let height_m = raw.height_m.ok_or(KeypointError::MissingMeta("height_m"))?;
    let frame_rate_hz = raw
        .frame_rate_hz
        .ok_or(KeypointError::MissingMeta("frame_rate_hz"))?;
    let orthotic_side = raw
        .orthotic_side
        .ok_or(KeypointError::MissingMeta("orthotic_side"))?;
    let frames_raw = raw.frames.ok_or(KeypointError::MissingMeta("frames"))?;

    let meta = SequenceMeta {
        subject_id,
        height_m,
        frame_rate_hz,
        orthotic_side,
        label: raw.label,
        landmark_map: raw
            .landmark_map
            .unwrap_or_else(SequenceMeta::default_landmark_map),
    };

    let expected = frames_raw.first().map(|f| f.len()).unwrap_or(0);
    let mut frames = Vec::with_capacity(frames_raw.len());
    for (i, lm) in frames_raw.into_iter().enumerate() {
        if lm.len() != expected {
            return Err(KeypointError::InconsistentLandmarkCount {
                frame: i,
                got: lm.len(),
                expected,
            });
        }
        for p in &lm {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(KeypointError::MalformedDocument(format!(
                    "non-finite coordinate in frame {i}"
                )));
            }
        }
        frames.push(KeypointFrame { landmarks: lm });
    }

    meta.check(expected)?;
    Ok(KeypointSequence { meta, frames })
}

/// Serialize a sequence back to the pose-trace JSON schema.
pub fn serialize_pose_trace(seq: &KeypointSequence) -> String {
    serde_json::to_string(seq).expect("pose trace serialization cannot fail")
}

/// One finding of [`validate_sequence`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<usize>,
}

/// Blocking errors and non-blocking warnings found in a sequence.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<ValidationIssue>,
    pub warnings: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }

    pub fn is_blocking(&self) -> bool {
        !self.errors.is_empty()
    }
}

/// Validation knobs. Visibility gating is off unless a threshold is set.
#[derive(Debug, Clone, Copy, Default)]
pub struct ValidationOptions {
    pub heel_visibility_warn_threshold: Option<f64>,
}

pub fn validate_sequence(seq: &KeypointSequence) -> ValidationReport {
    validate_sequence_with(seq, &ValidationOptions::default())
}

/// Check a sequence against the pipeline's preconditions.
///
/// Coordinates outside [0,1] are warnings only: a moving handheld camera
/// routinely pushes landmarks slightly out of frame and those cycles are
/// still usable.
pub fn validate_sequence_with(
    seq: &KeypointSequence,
    opts: &ValidationOptions,
) -> ValidationReport {
    let mut report = ValidationReport::default();

    if seq.frames.len() < 2 {
        report.errors.push(ValidationIssue {
            code: "too_short".into(),
            message: format!(
                "sequence has {} frame(s); at least 2 are required",
                seq.frames.len()
            ),
            frame: None,
        });
    }

    for (i, frame) in seq.frames.iter().enumerate() {
        if frame
            .landmarks
            .iter()
            .any(|p| !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y))
        {
            report.warnings.push(ValidationIssue {
                code: "out_of_frame_coordinate".into(),
                message: format!("frame {i} has coordinates outside [0,1]"),
                frame: Some(i),
            });
        }
    }

    if let Some(threshold) = opts.heel_visibility_warn_threshold {
        let heel_names = [LANDMARK_LEFT_HEEL, LANDMARK_RIGHT_HEEL];
        for (i, frame) in seq.frames.iter().enumerate() {
            for name in heel_names {
                if let Some(&idx) = seq.meta.landmark_map.get(name) {
                    if let Some(p) = frame.landmarks.get(idx) {
                        if p.v < threshold {
                            report.warnings.push(ValidationIssue {
                                code: "low_heel_visibility".into(),
                                message: format!(
                                    "frame {i}: {name} visibility {:.3} below {threshold}",
                                    p.v
                                ),
                                frame: Some(i),
                            });
                        }
                    }
                }
            }
        }
    }

    report
}

/// Project the four foot landmarks into per-frame coordinate series.
pub fn heel_series(seq: &KeypointSequence) -> Result<HeelSeries, KeypointError> {
    let lh = seq.meta.landmark(LANDMARK_LEFT_HEEL)?;
    let rh = seq.meta.landmark(LANDMARK_RIGHT_HEEL)?;
    let lt = seq.meta.landmark(LANDMARK_LEFT_FOOT_INDEX)?;
    let rt = seq.meta.landmark(LANDMARK_RIGHT_FOOT_INDEX)?;

    let n = seq.frames.len();
    let mut out = HeelSeries {
        left_heel_x: Vec::with_capacity(n),
        right_heel_x: Vec::with_capacity(n),
        left_toe_x: Vec::with_capacity(n),
        right_toe_x: Vec::with_capacity(n),
        meta: seq.meta.clone(),
    };

    for (i, frame) in seq.frames.iter().enumerate() {
        let fetch = |idx: usize, name: &str| {
            frame
                .landmarks
                .get(idx)
                .map(|p| p.x)
                .ok_or_else(|| KeypointError::InconsistentLandmarkCount {
                    frame: i,
                    got: frame.landmarks.len(),
                    expected: idx + 1,
                })
                .map_err(|_| KeypointError::MissingLandmark(name.to_string()))
        };
        out.left_heel_x.push(fetch(lh, LANDMARK_LEFT_HEEL)?);
        out.right_heel_x.push(fetch(rh, LANDMARK_RIGHT_HEEL)?);
        out.left_toe_x.push(fetch(lt, LANDMARK_LEFT_FOOT_INDEX)?);
        out.right_toe_x.push(fetch(rt, LANDMARK_RIGHT_FOOT_INDEX)?);
    }

    Ok(out)
}
