//! Heel-distance signal processing: smoothing, maxima detection and
//! pruning, leg labeling, and gait-cycle segmentation.
//!
//! Heel strikes are approximated by the local maxima of the inter-heel
//! horizontal distance: maximum foot separation marks terminal stance of
//! one limb and initial contact of the other, which is the usable event
//! for orthosis wearers who touch down flat-footed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keypoints::{HeelSeries, Leg, SequenceMeta};

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("walking direction is ambiguous (median toe-heel offset {0:e} within 1e-6)")]
    AmbiguousDirection(f64),
    #[error("invalid signal config: {0}")]
    InvalidConfig(String),
}

/// Per-frame inter-heel distance in normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSignal {
    pub d: Vec<f64>,
    pub frame_rate_hz: f64,
}

impl DistanceSignal {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }
}

/// Tuning for smoothing and maxima selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalConfig {
    /// Gaussian smoothing width in frames (~0.1 s of video by default).
    pub smoothing_sigma_frames: f64,
    /// Minimum peak prominence as a fraction of the signal's peak-to-peak.
    pub min_prominence: f64,
    /// Adjacent maxima closer than this fraction of the median
    /// inter-maxima gap are treated as outliers.
    pub min_gap_fraction: f64,
}

impl SignalConfig {
    /// Defaults for a given capture frame rate.
    pub fn for_frame_rate(frame_rate_hz: f64) -> SignalConfig {
        SignalConfig {
            smoothing_sigma_frames: frame_rate_hz / 10.0,
            min_prominence: 0.10,
            min_gap_fraction: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        if !self.smoothing_sigma_frames.is_finite() || self.smoothing_sigma_frames <= 0.0 {
            return Err(SignalError::InvalidConfig(
                "smoothing_sigma_frames must be > 0".into(),
            ));
        }
        if !self.min_prominence.is_finite() || self.min_prominence <= 0.0 {
            return Err(SignalError::InvalidConfig("min_prominence must be > 0".into()));
        }
        if !self.min_gap_fraction.is_finite()
            || self.min_gap_fraction <= 0.0
            || self.min_gap_fraction >= 1.0
        {
            return Err(SignalError::InvalidConfig(
                "min_gap_fraction must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// A detected local maximum before leg labeling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawMaximum {
    pub frame: usize,
    pub value: f64,
}

/// Whether a leg carries the orthosis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Role {
    Ol,
    Nol,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Role::Ol => write!(f, "OL"),
            Role::Nol => write!(f, "NOL"),
        }
    }
}

/// A heel-strike maximum attributed to a leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledMaximum {
    pub frame: usize,
    pub value: f64,
    pub leg: Leg,
    pub role: Role,
}

/// Three consecutive labeled maxima spanning one gait cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitCycle {
    pub maxima: [LabeledMaximum; 3],
    pub meta: SequenceMeta,
}

impl GaitCycle {
    pub fn new(maxima: [LabeledMaximum; 3], meta: SequenceMeta) -> GaitCycle {
        debug_assert!(maxima[0].frame < maxima[1].frame && maxima[1].frame < maxima[2].frame);
        debug_assert_eq!(maxima[0].leg, maxima[2].leg);
        debug_assert_eq!(maxima[1].leg, maxima[0].leg.opposite());
        GaitCycle { maxima, meta }
    }

    pub fn frames(&self) -> [usize; 3] {
        [self.maxima[0].frame, self.maxima[1].frame, self.maxima[2].frame]
    }

    pub fn values(&self) -> [f64; 3] {
        [self.maxima[0].value, self.maxima[1].value, self.maxima[2].value]
    }
}

/// Absolute difference of the heels' horizontal coordinates, per frame.
pub fn heel_distance(heels: &HeelSeries) -> DistanceSignal {
    let d = heels
        .left_heel_x
        .iter()
        .zip(&heels.right_heel_x)
        .map(|(l, r)| (l - r).abs())
        .collect();
    DistanceSignal {
        d,
        frame_rate_hz: heels.meta.frame_rate_hz,
    }
}

fn reflect_index(mut i: isize, n: usize) -> usize {
    // Fold into [0, 2n) with period 2n, then mirror the upper half.
    let n = n as isize;
    let period = 2 * n;
    i = i.rem_euclid(period);
    if i >= n {
        i = period - 1 - i;
    }
    i as usize
}

/// Discrete Gaussian convolution, kernel truncated at ±4σ and renormalized
/// to unit sum, with reflective boundaries. `sigma == 0` is the identity.
pub fn gaussian_smooth(sig: &DistanceSignal, sigma: f64) -> DistanceSignal {
    assert!(sigma >= 0.0, "sigma must be nonnegative");
    if sigma == 0.0 || sig.d.is_empty() {
        return sig.clone();
    }
    let radius = (4.0 * sigma).ceil() as usize;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    for j in -(radius as isize)..=(radius as isize) {
        let z = j as f64 / sigma;
        kernel.push((-0.5 * z * z).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= sum;
    }

    let n = sig.d.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = 0.0;
        for (k, w) in kernel.iter().enumerate() {
            let j = i as isize + k as isize - radius as isize;
            acc += w * sig.d[reflect_index(j, n)];
        }
        out.push(acc);
    }
    DistanceSignal {
        d: out,
        frame_rate_hz: sig.frame_rate_hz,
    }
}

/// Prominence by the contour rule: walk outward from the peak until a
/// strictly higher sample (or the boundary); the reference level is the
/// higher of the two interval minima.
fn prominence(d: &[f64], peak: usize) -> f64 {
    let v = d[peak];
    let mut left_min = v;
    let mut i = peak;
    while i > 0 {
        i -= 1;
        if d[i] > v {
            break;
        }
        left_min = left_min.min(d[i]);
    }
    let mut right_min = v;
    let mut i = peak;
    while i + 1 < d.len() {
        i += 1;
        if d[i] > v {
            break;
        }
        right_min = right_min.min(d[i]);
    }
    v - left_min.max(right_min)
}

/// Interior local maxima (plateaus resolved to their leftmost index)
/// whose prominence reaches `min_prominence` x peak-to-peak.
///
/// Signals shorter than 3 frames have no interior points and yield an
/// empty list; endpoints are never returned.
pub fn detect_maxima(sig: &DistanceSignal, cfg: &SignalConfig) -> Vec<RawMaximum> {
    let d = &sig.d;
    let n = d.len();
    if n < 3 {
        return Vec::new();
    }

    let mut candidates = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if d[i] > d[i - 1] {
            let start = i;
            let mut j = i;
            while j + 1 < n && d[j + 1] == d[j] {
                j += 1;
            }
            if j + 1 < n && d[j + 1] < d[j] {
                candidates.push(start);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }

    let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = cfg.min_prominence * (hi - lo);

    candidates
        .into_iter()
        .filter(|&p| prominence(d, p) >= threshold)
        .map(|p| RawMaximum { frame: p, value: d[p] })
        .collect()
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Remove outlier maxima: while any adjacent pair sits closer than
/// `min_gap_fraction` x the median inter-maxima gap, drop the
/// lower-valued member of the closest such pair (ties drop the later
/// one) and recompute the median.
pub fn prune_maxima(maxima: &[RawMaximum], cfg: &SignalConfig) -> Vec<RawMaximum> {
    let mut kept: Vec<RawMaximum> = maxima.to_vec();
    while kept.len() >= 2 {
        let gaps: Vec<f64> = kept
            .windows(2)
            .map(|w| (w[1].frame - w[0].frame) as f64)
            .collect();
        let mut sorted = gaps.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let threshold = cfg.min_gap_fraction * median(&sorted);

        let closest = gaps
            .iter()
            .enumerate()
            .filter(|(_, &g)| g < threshold)
            .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap());
        let Some((pair_idx, _)) = closest else { break };

        let remove = if kept[pair_idx].value < kept[pair_idx + 1].value {
            pair_idx
        } else {
            pair_idx + 1
        };
        kept.remove(remove);
    }
    kept
}

/// Walking direction: sign of the median per-frame toe-minus-heel offset
/// averaged over both feet.
fn walking_direction(heels: &HeelSeries) -> Result<f64, SignalError> {
    let mut offsets: Vec<f64> = (0..heels.len())
        .map(|t| {
            0.5 * ((heels.left_toe_x[t] - heels.left_heel_x[t])
                + (heels.right_toe_x[t] - heels.right_heel_x[t]))
        })
        .collect();
    offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = median(&offsets);
    if med.abs() < 1e-6 {
        return Err(SignalError::AmbiguousDirection(med));
    }
    Ok(med.signum())
}

/// Label each maximum with the newly planted (leading) leg and its
/// orthotic role, then enforce alternation by dropping the lower-valued
/// member of any adjacent same-leg pair.
pub fn assign_legs(
    maxima: &[RawMaximum],
    heels: &HeelSeries,
) -> Result<Vec<LabeledMaximum>, SignalError> {
    let dir = walking_direction(heels)?;
    let meta = &heels.meta;

    let mut labeled: Vec<LabeledMaximum> = maxima
        .iter()
        .map(|m| {
            let l = heels.left_heel_x[m.frame];
            let r = heels.right_heel_x[m.frame];
            // Leading foot = heel farther along the walking direction.
            let leg = if dir * (l - r) >= 0.0 { Leg::Left } else { Leg::Right };
            let role = if leg == meta.orthotic_side { Role::Ol } else { Role::Nol };
            LabeledMaximum {
                frame: m.frame,
                value: m.value,
                leg,
                role,
            }
        })
        .collect();

    // Non-alternating runs: drop the lower-valued offender (ties: later).
    while let Some(i) = labeled.windows(2).position(|w| w[0].leg == w[1].leg) {
        let remove = if labeled[i].value < labeled[i + 1].value { i } else { i + 1 };
        labeled.remove(remove);
    }

    Ok(labeled)
}

/// Windows of three consecutive maxima advancing by two, so consecutive
/// cycles share one boundary maximum. Fewer than three maxima yield no
/// cycles.
pub fn segment_cycles(labeled: &[LabeledMaximum], meta: &SequenceMeta) -> Vec<GaitCycle> {
    let mut cycles = Vec::new();
    let mut i = 0;
    while i + 2 < labeled.len() {
        cycles.push(GaitCycle::new(
            [labeled[i], labeled[i + 1], labeled[i + 2]],
            meta.clone(),
        ));
        i += 2;
    }
    cycles
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypoints::SequenceMeta;
    use proptest::prelude::*;

    fn meta(orthotic: Leg) -> SequenceMeta {
        SequenceMeta {
            subject_id: "t".into(),
            height_m: 1.7,
            frame_rate_hz: 30.0,
            orthotic_side: orthotic,
            label: None,
            landmark_map: SequenceMeta::default_landmark_map(),
        }
    }

    fn sig(d: Vec<f64>) -> DistanceSignal {
        DistanceSignal { d, frame_rate_hz: 30.0 }
    }

    fn default_cfg() -> SignalConfig {
        SignalConfig::for_frame_rate(30.0)
    }

    #[test]
    fn heel_distance_is_absolute_difference() {
        let heels = HeelSeries {
            left_heel_x: vec![0.5, 0.1, 0.2],
            right_heel_x: vec![0.3, 0.4, 0.1],
            left_toe_x: vec![0.55, 0.15, 0.25],
            right_toe_x: vec![0.35, 0.45, 0.15],
            meta: meta(Leg::Left),
        };
        let d = heel_distance(&heels);
        assert!((d.d[0] - 0.2).abs() < 1e-15);
        assert!((d.d[1] - 0.3).abs() < 1e-15);
        assert!((d.d[2] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn heel_distance_zero_when_equal() {
        let heels = HeelSeries {
            left_heel_x: vec![0.4; 5],
            right_heel_x: vec![0.4; 5],
            left_toe_x: vec![0.45; 5],
            right_toe_x: vec![0.45; 5],
            meta: meta(Leg::Left),
        };
        assert!(heel_distance(&heels).d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn smooth_sigma_zero_is_identity() {
        let s = sig(vec![0.1, 0.9, 0.3, 0.7]);
        assert_eq!(gaussian_smooth(&s, 0.0), s);
    }

    #[test]
    fn smooth_preserves_constant() {
        let s = sig(vec![0.42; 50]);
        let out = gaussian_smooth(&s, 3.0);
        for v in out.d {
            assert!((v - 0.42).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_impulse_recovers_kernel() {
        // Independently computed normalized Gaussian kernel, sigma = 2.
        let sigma = 2.0f64;
        let radius = (4.0 * sigma).ceil() as isize;
        let raw: Vec<f64> = (-radius..=radius)
            .map(|j| (-0.5 * (j as f64 / sigma).powi(2)).exp())
            .collect();
        let norm: f64 = raw.iter().sum();
        let expected: Vec<f64> = raw.iter().map(|v| v / norm).collect();

        let n = 64;
        let center = 32;
        let mut d = vec![0.0; n];
        d[center] = 1.0;
        let out = gaussian_smooth(&sig(d), sigma);
        for (j, e) in expected.iter().enumerate() {
            let idx = center as isize - radius + j as isize;
            assert!(
                (out.d[idx as usize] - e).abs() < 1e-12,
                "kernel mismatch at offset {}",
                j as isize - radius
            );
        }
    }

    #[test]
    fn detect_maxima_on_rectified_sinusoid() {
        // |sin(2*pi*t/30)| over 150 frames: analytic peaks at 7.5 + 15k.
        let n = 150;
        let d: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 30.0).sin().abs())
            .collect();
        let peaks = detect_maxima(&sig(d), &default_cfg());
        let analytic: Vec<f64> = (0..).map(|k| 7.5 + 15.0 * k as f64)
            .take_while(|&p| p < (n - 1) as f64)
            .collect();
        assert_eq!(peaks.len(), analytic.len(), "peaks: {peaks:?}");
        for (p, a) in peaks.iter().zip(&analytic) {
            assert!(
                (p.frame as f64 - a).abs() <= 1.0,
                "peak {} vs analytic {}",
                p.frame,
                a
            );
        }
    }

    #[test]
    fn detect_maxima_monotone_and_constant_empty() {
        let rising: Vec<f64> = (0..20).map(|t| t as f64).collect();
        assert!(detect_maxima(&sig(rising), &default_cfg()).is_empty());
        assert!(detect_maxima(&sig(vec![0.3; 20]), &default_cfg()).is_empty());
        assert!(detect_maxima(&sig(vec![0.3, 0.4]), &default_cfg()).is_empty());
    }

    #[test]
    fn detect_maxima_plateau_leftmost() {
        let d = vec![0.0, 1.0, 1.0, 1.0, 0.0];
        let peaks = detect_maxima(&sig(d), &default_cfg());
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].frame, 1);
    }

    #[test]
    fn prune_removes_close_low_maximum() {
        // Gaps [30, 30, 3, 27, 30]; the 3-frame neighbor is lower-valued.
        // Hand application of the rule: median gap 30 -> threshold 15; the
        // pair at gap 3 loses its lower member, gaps become [30,30,30,30].
        let frames = [10usize, 40, 70, 73, 100, 130];
        let values = [0.5, 0.5, 0.5, 0.2, 0.5, 0.5];
        let maxima: Vec<RawMaximum> = frames
            .iter()
            .zip(values)
            .map(|(&frame, value)| RawMaximum { frame, value })
            .collect();
        let pruned = prune_maxima(&maxima, &default_cfg());
        let kept: Vec<usize> = pruned.iter().map(|m| m.frame).collect();
        assert_eq!(kept, vec![10, 40, 70, 100, 130]);
    }

    #[test]
    fn prune_keeps_equal_gaps_and_singletons() {
        let maxima: Vec<RawMaximum> = (0..5)
            .map(|k| RawMaximum { frame: 10 + 30 * k, value: 0.5 })
            .collect();
        assert_eq!(prune_maxima(&maxima, &default_cfg()).len(), 5);
        let single = vec![RawMaximum { frame: 7, value: 0.9 }];
        assert_eq!(prune_maxima(&single, &default_cfg()), single);
    }

    fn walker_heels(orthotic: Leg) -> (HeelSeries, Vec<RawMaximum>) {
        // Left heel leads at even maxima, right at odd; facing +x.
        let n = 120;
        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        for t in 0..n {
            let phase = 2.0 * std::f64::consts::PI * t as f64 / 40.0;
            left.push(0.5 + 0.1 * phase.sin());
            right.push(0.5 - 0.1 * phase.sin());
        }
        let toes_l: Vec<f64> = left.iter().map(|x| x + 0.05).collect();
        let toes_r: Vec<f64> = right.iter().map(|x| x + 0.05).collect();
        let heels = HeelSeries {
            left_heel_x: left,
            right_heel_x: right,
            left_toe_x: toes_l,
            right_toe_x: toes_r,
            meta: meta(orthotic),
        };
        let d = heel_distance(&heels);
        let maxima = detect_maxima(&d, &default_cfg());
        (heels, maxima)
    }

    #[test]
    fn assign_legs_leading_heel_and_roles() {
        let (heels, maxima) = walker_heels(Leg::Left);
        let labeled = assign_legs(&maxima, &heels).unwrap();
        assert!(labeled.len() >= 4);
        // sin peaks (left leading) come first at t≈10, then troughs.
        assert_eq!(labeled[0].leg, Leg::Left);
        assert_eq!(labeled[0].role, Role::Ol);
        assert_eq!(labeled[1].leg, Leg::Right);
        assert_eq!(labeled[1].role, Role::Nol);
        for w in labeled.windows(2) {
            assert_ne!(w[0].leg, w[1].leg);
        }
    }

    #[test]
    fn swapping_leg_series_flips_labels() {
        let (heels, maxima) = walker_heels(Leg::Left);
        let swapped = HeelSeries {
            left_heel_x: heels.right_heel_x.clone(),
            right_heel_x: heels.left_heel_x.clone(),
            left_toe_x: heels.right_toe_x.clone(),
            right_toe_x: heels.left_toe_x.clone(),
            meta: heels.meta.clone(),
        };
        let a = assign_legs(&maxima, &heels).unwrap();
        let b = assign_legs(&maxima, &swapped).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.leg, y.leg.opposite());
            assert_ne!(x.role, y.role);
        }
    }

    #[test]
    fn spatial_mirror_preserves_labels() {
        // Mirroring coordinates flips the walking direction too, so the
        // direction-aware rule keeps the same leg labels.
        let (heels, maxima) = walker_heels(Leg::Left);
        let mirror = |v: &[f64]| v.iter().map(|x| 1.0 - x).collect::<Vec<_>>();
        let mirrored = HeelSeries {
            left_heel_x: mirror(&heels.left_heel_x),
            right_heel_x: mirror(&heels.right_heel_x),
            left_toe_x: mirror(&heels.left_toe_x),
            right_toe_x: mirror(&heels.right_toe_x),
            meta: heels.meta.clone(),
        };
        let a = assign_legs(&maxima, &heels).unwrap();
        let b = assign_legs(&maxima, &mirrored).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.leg, y.leg);
        }
    }

    #[test]
    fn coincident_toe_and_heel_is_ambiguous() {
        let heels = HeelSeries {
            left_heel_x: vec![0.4, 0.6, 0.4],
            right_heel_x: vec![0.6, 0.4, 0.6],
            left_toe_x: vec![0.4, 0.6, 0.4],
            right_toe_x: vec![0.6, 0.4, 0.6],
            meta: meta(Leg::Left),
        };
        let maxima = vec![RawMaximum { frame: 1, value: 0.2 }];
        assert!(matches!(
            assign_legs(&maxima, &heels),
            Err(SignalError::AmbiguousDirection(_))
        ));
    }

    fn alternating(n: usize) -> Vec<LabeledMaximum> {
        (0..n)
            .map(|k| LabeledMaximum {
                frame: 10 + 15 * k,
                value: 0.2,
                leg: if k % 2 == 0 { Leg::Left } else { Leg::Right },
                role: if k % 2 == 0 { Role::Ol } else { Role::Nol },
            })
            .collect()
    }

    #[test]
    fn segment_cycle_counts() {
        let m = meta(Leg::Left);
        assert_eq!(segment_cycles(&alternating(7), &m).len(), 3);
        assert_eq!(segment_cycles(&alternating(2), &m).len(), 0);
        assert_eq!(segment_cycles(&alternating(3), &m).len(), 1);
        // Consecutive cycles share one boundary maximum.
        let cycles = segment_cycles(&alternating(7), &m);
        assert_eq!(cycles[0].frames(), [10, 25, 40]);
        assert_eq!(cycles[1].frames(), [40, 55, 70]);
        assert_eq!(cycles[2].frames(), [70, 85, 100]);
    }

    proptest! {
        #[test]
        fn heel_distance_swap_invariant(
            xs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..60)
        ) {
            let (left, right): (Vec<f64>, Vec<f64>) = xs.into_iter().unzip();
            let toes_l: Vec<f64> = left.iter().map(|x| x + 0.05).collect();
            let toes_r: Vec<f64> = right.iter().map(|x| x + 0.05).collect();
            let a = HeelSeries {
                left_heel_x: left.clone(),
                right_heel_x: right.clone(),
                left_toe_x: toes_l.clone(),
                right_toe_x: toes_r.clone(),
                meta: meta(Leg::Left),
            };
            let b = HeelSeries {
                left_heel_x: right,
                right_heel_x: left,
                left_toe_x: toes_r,
                right_toe_x: toes_l,
                meta: meta(Leg::Left),
            };
            prop_assert_eq!(heel_distance(&a), heel_distance(&b));
        }

        #[test]
        fn smooth_preserves_periodic_mean(
            period in 8usize..40,
            cycles in 2usize..6,
            amp in 0.05f64..0.4,
            sigma in 0.5f64..4.0
        ) {
            let n = period * cycles;
            let d: Vec<f64> = (0..n)
                .map(|t| 0.5 + amp * (2.0 * std::f64::consts::PI * t as f64 / period as f64).sin())
                .collect();
            let s = sig(d);
            let mean_in: f64 = s.d.iter().sum::<f64>() / n as f64;
            let out = gaussian_smooth(&s, sigma);
            let mean_out: f64 = out.d.iter().sum::<f64>() / n as f64;
            prop_assert!(((mean_out - mean_in) / mean_in).abs() < 1e-6);
        }

        #[test]
        fn pruned_gaps_respect_median_threshold(
            frames in proptest::collection::btree_set(0usize..400, 2..30),
            seed in 0u64..1000
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let maxima: Vec<RawMaximum> = frames
                .into_iter()
                .map(|frame| RawMaximum { frame, value: rng.random_range(0.1..1.0) })
                .collect();
            let cfg = default_cfg();
            let pruned = prune_maxima(&maxima, &cfg);
            prop_assert!(!pruned.is_empty());
            for w in pruned.windows(2) {
                prop_assert!(w[1].frame > w[0].frame);
            }
            if pruned.len() >= 2 {
                let gaps: Vec<f64> = pruned
                    .windows(2)
                    .map(|w| (w[1].frame - w[0].frame) as f64)
                    .collect();
                let mut sorted = gaps.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let threshold = cfg.min_gap_fraction * median(&sorted);
                for g in gaps {
                    prop_assert!(g >= threshold);
                }
            }
        }

        #[test]
        fn cycle_count_formula(n in 0usize..20) {
            let m = meta(Leg::Left);
            let expected = if n >= 1 { (n - 1) / 2 } else { 0 };
            prop_assert_eq!(segment_cycles(&alternating(n), &m).len(), expected);
        }
    }
}
