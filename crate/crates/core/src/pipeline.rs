//! End-to-end composition: keypoint sequence -> heel-distance signal ->
//! labeled maxima -> gait cycles -> per-cycle feature vectors.
//!
//! Maxima are located on the smoothed signal (detection needs the
//! smoothing to survive camera motion), but the values attached to them
//! are read from the raw signal: smoothing attenuates peak heights by
//! 10-20% at walking cadence, which would corrupt every spatial feature.
//! The raw readout averages the three frames around the detected peak to
//! keep single-sample keypoint noise out of the step lengths.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::FeatureRow;
use crate::features::{feature_vector, FeatureError, FeatureVector};
use crate::keypoints::{heel_series, validate_sequence, KeypointError, KeypointSequence};
use crate::signal::{
    assign_legs, detect_maxima, gaussian_smooth, heel_distance, prune_maxima, segment_cycles,
    LabeledMaximum, RawMaximum, SignalConfig, SignalError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("sequence failed validation: {0}")]
    InvalidSequence(String),
    #[error(transparent)]
    Keypoints(#[from] KeypointError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// A gait cycle dropped during processing, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discard {
    pub cycle_index: usize,
    pub reason: String,
}

/// One extracted cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub cycle_index: usize,
    pub features: FeatureVector,
}

/// Signal-level intermediates, kept for plotting and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    pub frame_rate_hz: f64,
    pub d_raw: Vec<f64>,
    pub d_smooth: Vec<f64>,
    /// Frames of the maxima retained after pruning and leg assignment.
    pub maxima: Vec<usize>,
}

/// Full pipeline output for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub records: Vec<CycleRecord>,
    pub discards: Vec<Discard>,
    pub labeled_maxima: Vec<LabeledMaximum>,
    pub trace: SignalTrace,
}

/// Average of the raw signal over the three frames around a peak.
fn raw_peak_value(d: &[f64], frame: usize) -> f64 {
    let lo = frame.saturating_sub(1);
    let hi = (frame + 2).min(d.len());
    d[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
}

/// Run the signal chain and feature extraction over one sequence.
///
/// `cfg` of `None` uses the defaults for the sequence's frame rate.
pub fn run_pipeline(
    seq: &KeypointSequence,
    cfg: Option<SignalConfig>,
) -> Result<PipelineRun, PipelineError> {
    let report = validate_sequence(seq);
    if report.is_blocking() {
        let msgs: Vec<String> = report.errors.iter().map(|e| e.message.clone()).collect();
        return Err(PipelineError::InvalidSequence(msgs.join("; ")));
    }

    let cfg = cfg.unwrap_or_else(|| SignalConfig::for_frame_rate(seq.meta.frame_rate_hz));
    cfg.validate()?;

    let heels = heel_series(seq)?;
    let d_raw = heel_distance(&heels);
    let d_smooth = gaussian_smooth(&d_raw, cfg.smoothing_sigma_frames);

    let detected = detect_maxima(&d_smooth, &cfg);
    // Values come from the raw signal at the frames found on the smoothed one.
    let raw_valued: Vec<RawMaximum> = detected
        .iter()
        .map(|m| RawMaximum {
            frame: m.frame,
            value: raw_peak_value(&d_raw.d, m.frame),
        })
        .collect();
    let pruned = prune_maxima(&raw_valued, &cfg);
    let labeled = assign_legs(&pruned, &heels)?;
    let cycles = segment_cycles(&labeled, &seq.meta);

    let mut records = Vec::with_capacity(cycles.len());
    let mut discards = Vec::new();
    for (i, cycle) in cycles.iter().enumerate() {
        match feature_vector(cycle) {
            Ok(features) => records.push(CycleRecord {
                cycle_index: i,
                features,
            }),
            Err(FeatureError::DegenerateCycle(frame)) => discards.push(Discard {
                cycle_index: i,
                reason: format!("degenerate cycle at frame {frame}"),
            }),
        }
    }

    let trace = SignalTrace {
        frame_rate_hz: seq.meta.frame_rate_hz,
        d_raw: d_raw.d,
        d_smooth: d_smooth.d,
        maxima: labeled.iter().map(|m| m.frame).collect(),
    };

    Ok(PipelineRun {
        records,
        discards,
        labeled_maxima: labeled,
        trace,
    })
}

/// Pipeline output as feature-CSV rows; cycle ids are `prefix:index`.
pub fn feature_rows(
    seq: &KeypointSequence,
    cfg: Option<SignalConfig>,
    prefix: &str,
) -> Result<(Vec<FeatureRow>, Vec<Discard>), PipelineError> {
    let run = run_pipeline(seq, cfg)?;
    let rows = run
        .records
        .into_iter()
        .map(|rec| FeatureRow {
            subject_id: seq.meta.subject_id.clone(),
            cycle_id: format!("{prefix}:{}", rec.cycle_index),
            features: rec.features,
            label: seq.meta.label.clone(),
        })
        .collect();
    Ok((rows, run.discards))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;
    use crate::synth::{generate_walk, SynthConfig};

    fn mean_features(records: &[CycleRecord]) -> FeatureVector {
        let n = records.len() as f64;
        let mut acc = [0.0; 7];
        for r in records {
            for (slot, v) in acc.iter_mut().zip(r.features.as_array()) {
                *slot += v / n;
            }
        }
        FeatureVector::from_array(acc)
    }

    #[test]
    fn clean_walk_raw_distance_matches_truth_values_bitwise() {
        // With zero noise and jitter, the extracted heel series are the
        // generator's own quantized coordinates, so the distance signal
        // at the analytic strike frames equals the recorded truth
        // amplitudes bit for bit.
        let (seq, truth) = generate_walk(&SynthConfig::default()).unwrap();
        let heels = crate::keypoints::heel_series(&seq).unwrap();
        let d = crate::signal::heel_distance(&heels);
        for (&frame, &value) in truth.maxima_frames.iter().zip(&truth.maxima_values) {
            assert_eq!(d.d[frame].to_bits(), value.to_bits());
        }
    }

    #[test]
    fn symmetric_walk_extracts_equal_step_lengths() {
        let (seq, _) = generate_walk(&SynthConfig::default()).unwrap();
        let run = run_pipeline(&seq, None).unwrap();
        assert_eq!(run.records.len(), 3);
        let f = mean_features(&run.records);
        assert!(
            (f.step_len_ol_m - f.step_len_nol_m).abs() < 1e-6,
            "OL {} vs NOL {}",
            f.step_len_ol_m,
            f.step_len_nol_m
        );
        // For a symmetric walker the stride is two consecutive steps.
        let mean_step = 0.5 * (f.step_len_ol_m + f.step_len_nol_m);
        assert!(
            (f.stride_len_m - 2.0 * mean_step).abs() / (2.0 * mean_step) < 0.05,
            "stride {} vs 2x step {}",
            f.stride_len_m,
            2.0 * mean_step
        );
    }

    #[test]
    fn zero_noise_maxima_match_analytic_strikes_within_one_frame() {
        for seed in 0..8u64 {
            let cfg = SynthConfig {
                step_len_left: 0.18 + 0.01 * seed as f64,
                step_len_right: 0.24 - 0.008 * seed as f64,
                step_period_left_s: 0.45 + 0.02 * seed as f64,
                step_period_right_s: 0.60 - 0.015 * seed as f64,
                n_cycles: 4,
                seed,
                ..SynthConfig::default()
            };
            let (seq, truth) = generate_walk(&cfg).unwrap();
            let run = run_pipeline(&seq, None).unwrap();
            assert_eq!(
                run.trace.maxima.len(),
                truth.maxima_frames.len(),
                "seed {seed}: detected {:?} vs truth {:?}",
                run.trace.maxima,
                truth.maxima_frames
            );
            for (got, want) in run.trace.maxima.iter().zip(&truth.maxima_frames) {
                let diff = (*got as i64 - *want as i64).abs();
                assert!(diff <= 1, "seed {seed}: frame {got} vs {want}");
            }
        }
    }

    #[test]
    fn asymmetric_supports_recovered_within_one_frame_time() {
        let cfg = SynthConfig {
            step_len_left: 0.55 / 1.7,
            step_len_right: 0.45 / 1.7,
            step_period_left_s: 0.4,
            step_period_right_s: 0.6,
            n_cycles: 4,
            ..SynthConfig::default()
        };
        let (seq, truth) = generate_walk(&cfg).unwrap();
        let run = run_pipeline(&seq, None).unwrap();
        let got = mean_features(&run.records);
        let want = truth.features;
        let frame_time = 1.0 / 30.0;
        assert!((got.ss_ol_s - want.ss_ol_s).abs() <= frame_time, "{got:?} vs {want:?}");
        assert!((got.ss_nol_s - want.ss_nol_s).abs() <= frame_time);
        // Step lengths recover the configured values within 5%.
        assert!((got.step_len_ol_m - 0.55).abs() / 0.55 < 0.05, "OL {}", got.step_len_ol_m);
        assert!((got.step_len_nol_m - 0.45).abs() / 0.45 < 0.05, "NOL {}", got.step_len_nol_m);
    }

    #[test]
    fn cadence_equivalent_recovered_within_two_steps_per_minute() {
        // Eq-4 cadence 90/period for symmetric supports: 110 -> 0.818 s.
        let cfg = SynthConfig {
            step_period_left_s: 90.0 / 110.0,
            step_period_right_s: 90.0 / 110.0,
            n_cycles: 4,
            ..SynthConfig::default()
        };
        let (seq, truth) = generate_walk(&cfg).unwrap();
        assert!((truth.features.cadence_spm - 110.0).abs() < 2.0, "truth {}", truth.features.cadence_spm);
        let run = run_pipeline(&seq, None).unwrap();
        let got = mean_features(&run.records);
        assert!(
            (got.cadence_spm - truth.features.cadence_spm).abs() <= 2.0,
            "cadence {} vs {}",
            got.cadence_spm,
            truth.features.cadence_spm
        );
    }

    #[test]
    fn noisy_jittered_walk_stays_within_acceptance_bounds() {
        let cfg = SynthConfig {
            step_len_left: 0.20,
            step_len_right: 0.16,
            step_period_left_s: 0.5,
            step_period_right_s: 0.62,
            n_cycles: 5,
            keypoint_noise_std: 0.005,
            camera_jitter_amp: 0.1,
            camera_jitter_period_s: 1.7,
            seed: 12345,
            ..SynthConfig::default()
        };
        let (seq, truth) = generate_walk(&cfg).unwrap();
        let run = run_pipeline(&seq, None).unwrap();
        let got = mean_features(&run.records);
        let want = truth.features;
        let frame_time = 1.0 / 30.0;
        let rel = |a: f64, b: f64| (a - b).abs() / b;
        assert!(rel(got.step_len_ol_m, want.step_len_ol_m) < 0.05);
        assert!(rel(got.step_len_nol_m, want.step_len_nol_m) < 0.05);
        assert!(rel(got.stride_len_m, want.stride_len_m) < 0.05);
        assert!(rel(got.speed_mps, want.speed_mps) < 0.05);
        assert!((got.ss_ol_s - want.ss_ol_s).abs() <= frame_time);
        assert!((got.ss_nol_s - want.ss_nol_s).abs() <= frame_time);
        assert!((got.cadence_spm - want.cadence_spm).abs() <= 2.0);
    }

    #[test]
    fn short_walk_yields_no_cycles_without_error() {
        let cfg = SynthConfig {
            n_cycles: 1,
            ..SynthConfig::default()
        };
        let (mut seq, _) = generate_walk(&cfg).unwrap();
        // Truncate so fewer than 3 maxima survive.
        seq.frames.truncate(20);
        let run = run_pipeline(&seq, None).unwrap();
        assert!(run.records.is_empty());
    }

    #[test]
    fn feature_rows_carry_subject_label_and_prefix() {
        let cfg = SynthConfig {
            subject_id: "p7".into(),
            label: Some("KAFO2".into()),
            ..SynthConfig::default()
        };
        let (seq, _) = generate_walk(&cfg).unwrap();
        let (rows, discards) = feature_rows(&seq, None, "walk1").unwrap();
        assert_eq!(rows.len(), 3);
        assert!(discards.is_empty());
        assert_eq!(rows[0].subject_id, "p7");
        assert_eq!(rows[0].cycle_id, "walk1:0");
        assert_eq!(rows[2].cycle_id, "walk1:2");
        assert_eq!(rows[0].label.as_deref(), Some("KAFO2"));
    }
}
