//! Gait analysis from 2D pose-keypoint traces.
//!
//! The pipeline ingests per-frame body landmarks of a walking subject,
//! builds the inter-heel distance signal, segments gait cycles from its
//! local maxima, computes seven spatio-temporal features per cycle
//! (step lengths, stride length, single-support durations, cadence,
//! speed), classifies the gait with a small MLP (linear SVM baseline
//! included), and explains each prediction with a local linear
//! surrogate model. A synthetic walker generator with analytically
//! known gait parameters serves as ground truth for end-to-end checks.

pub mod dataset;
pub mod eval;
pub mod explain;
pub mod features;
pub mod keypoints;
pub mod mlp;
pub mod pipeline;
pub mod plot;
pub mod signal;
pub mod stats;
pub mod svm;
pub mod synth;

pub use dataset::{Dataset, FeatureTable, Standardizer};
pub use features::{FeatureVector, FEATURE_NAMES};
pub use keypoints::{HeelSeries, KeypointFrame, KeypointSequence, Leg, SequenceMeta};
pub use signal::{DistanceSignal, GaitCycle, LabeledMaximum, Role, SignalConfig};
