//! Speech segmentation: window-logit aggregation, hysteresis
//! thresholding, and segment post-processing.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::pool::{SpeakerEmbedding, VadTrack};

/// Sliding-window geometry for pooling. Defaults to 2 s windows with a
/// 1 s step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    pub width_s: f64,
    pub step_s: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { width_s: 2.0, step_s: 1.0 }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_s > 0.0 && self.step_s <= self.width_s) {
            return Err(Error::InvalidConfig(format!(
                "window step must satisfy 0 < step <= width (step {}, width {})",
                self.step_s, self.width_s
            )));
        }
        Ok(())
    }
}

/// Two-threshold segmentation plus post-processing knobs.
///
/// A segment opens when the logit reaches `theta_on` and closes when it
/// falls below `theta_off`. After segmentation, gaps of at most
/// `max_gap_s` are bridged and segments shorter than `min_dur_s` are
/// dropped, in that order. The thresholds are meant to be tuned on a
/// development set; the defaults are only a starting point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysteresisConfig {
    pub theta_on: f64,
    pub theta_off: f64,
    pub min_dur_s: f64,
    pub max_gap_s: f64,
}

impl Default for HysteresisConfig {
    fn default() -> Self {
        Self {
            theta_on: 0.0,
            theta_off: 0.0,
            min_dur_s: 0.2,
            max_gap_s: 0.3,
        }
    }
}

impl HysteresisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_on >= self.theta_off) {
            return Err(Error::InvalidConfig(format!(
                "theta_on ({}) must be >= theta_off ({})",
                self.theta_on, self.theta_off
            )));
        }
        if self.min_dur_s < 0.0 || self.max_gap_s < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "min_dur_s ({}) and max_gap_s ({}) must be non-negative",
                self.min_dur_s, self.max_gap_s
            )));
        }
        Ok(())
    }
}

/// Half-open speech interval in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub onset_s: f64,
    pub offset_s: f64,
}

impl Segment {
    pub fn new(onset_s: f64, offset_s: f64) -> Self {
        Self { onset_s, offset_s }
    }

    pub fn duration(&self) -> f64 {
        self.offset_s - self.onset_s
    }

    /// Positive-length intersection with `[start, end)`.
    pub fn overlaps(&self, start: f64, end: f64) -> bool {
        self.offset_s.min(end) - self.onset_s.max(start) > 0.0
    }
}

/// Speech interval attributed to one speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSegment {
    pub onset_s: f64,
    pub offset_s: f64,
    pub speaker: String,
}

impl LabeledSegment {
    pub fn new(onset_s: f64, offset_s: f64, speaker: impl Into<String>) -> Self {
        Self { onset_s, offset_s, speaker: speaker.into() }
    }

    pub fn segment(&self) -> Segment {
        Segment::new(self.onset_s, self.offset_s)
    }
}

/// Merge per-window VAD tracks into one global track by averaging the
/// logits of every window that covers a frame.
///
/// Track offsets are snapped to the nearest integer frame of the shared
/// hop. Frames inside the overall extent that no track covers (possible
/// only for non-contiguous inputs) are given a neutral logit of 0.
pub fn aggregate_window_logits(tracks: &[VadTrack]) -> Result<VadTrack> {
    let first = tracks
        .first()
        .ok_or_else(|| Error::EmptyInput("no VAD tracks to aggregate".into()))?;
    let hop = first.frame_hop_s;
    for t in tracks {
        if t.frame_hop_s != hop {
            return Err(Error::InconsistentFrameHop {
                expected: hop,
                actual: t.frame_hop_s,
            });
        }
    }
    let start = tracks.iter().map(|t| t.start_s).fold(f64::INFINITY, f64::min);
    let mut total_frames = 0usize;
    let offsets: Vec<usize> = tracks
        .iter()
        .map(|t| {
            let off = libm::round((t.start_s - start) / hop) as usize;
            total_frames = total_frames.max(off + t.len());
            off
        })
        .collect();

    let mut sums = vec![0.0; total_frames];
    let mut counts = vec![0u32; total_frames];
    for (track, &off) in tracks.iter().zip(&offsets) {
        for (i, &v) in track.v.iter().enumerate() {
            sums[off + i] += v;
            counts[off + i] += 1;
        }
    }
    let v = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| if n > 0 { s / n as f64 } else { 0.0 })
        .collect();
    VadTrack::new(v, hop, start)
}

/// Two-threshold hysteresis segmentation of a logit track.
///
/// While closed, the first frame with `v >= theta_on` opens a segment at
/// that frame's start time; while open, the first frame with
/// `v < theta_off` closes it at that frame's start time. A segment still
/// open at the end of the track closes at the track end.
pub fn hysteresis_segments(track: &VadTrack, cfg: &HysteresisConfig) -> Result<Vec<Segment>> {
    cfg.validate()?;
    let mut segments = Vec::new();
    let mut open_at: Option<usize> = None;
    for (i, &v) in track.v.iter().enumerate() {
        match open_at {
            None if v >= cfg.theta_on => open_at = Some(i),
            Some(onset) if v < cfg.theta_off => {
                segments.push(Segment::new(track.frame_time(onset), track.frame_time(i)));
                open_at = None;
            }
            _ => {}
        }
    }
    if let Some(onset) = open_at {
        segments.push(Segment::new(track.frame_time(onset), track.end_s()));
    }
    Ok(segments)
}

/// Bridge small gaps, then drop short segments.
///
/// Merging happens first: adjacent segments whose gap is at most
/// `max_gap_s` become one. Segments shorter than `min_dur_s` are removed
/// afterwards, so a chain of short segments that merges into a long one
/// survives.
pub fn postprocess_segments(segments: &[Segment], cfg: &HysteresisConfig) -> Vec<Segment> {
    let mut merged: Vec<Segment> = Vec::with_capacity(segments.len());
    for seg in segments {
        match merged.last_mut() {
            Some(last) if seg.onset_s - last.offset_s <= cfg.max_gap_s => {
                last.offset_s = last.offset_s.max(seg.offset_s);
            }
            _ => merged.push(*seg),
        }
    }
    merged.retain(|s| s.duration() >= cfg.min_dur_s);
    merged
}

/// Keep the windows whose extent intersects at least one speech segment
/// with positive overlap.
pub fn gate_windows(segments: &[Segment], windows: &[SpeakerEmbedding]) -> Vec<SpeakerEmbedding> {
    gate_window_indices(segments, windows)
        .into_iter()
        .map(|i| windows[i].clone())
        .collect()
}

/// Index variant of [`gate_windows`] for callers that track window identity.
pub fn gate_window_indices(segments: &[Segment], windows: &[SpeakerEmbedding]) -> Vec<usize> {
    windows
        .iter()
        .enumerate()
        .filter(|(_, w)| {
            segments
                .iter()
                .any(|s| s.overlaps(w.window_start_s, w.window_end_s))
        })
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn track(v: &[f64], hop: f64, start: f64) -> VadTrack {
        VadTrack::new(v.to_vec(), hop, start).unwrap()
    }

    fn emb(start: f64, end: f64) -> SpeakerEmbedding {
        SpeakerEmbedding {
            d: vec![1.0],
            window_start_s: start,
            window_end_s: end,
        }
    }

    #[test]
    fn aggregate_single_track_is_identity() {
        let t = track(&[0.1, 0.2, 0.3], 0.01, 0.5);
        assert_eq!(aggregate_window_logits(&[t.clone()]).unwrap(), t);
    }

    #[test]
    fn aggregate_averages_overlap() {
        let a = track(&[0.2, 0.2, 0.2], 0.01, 0.0);
        let b = track(&[0.4, 0.4, 0.4], 0.01, 0.01);
        let out = aggregate_window_logits(&[a, b]).unwrap();
        assert_eq!(out.start_s, 0.0);
        assert_eq!(out.len(), 4);
        let expected = [0.2, 0.3, 0.3, 0.4];
        for (got, want) in out.v.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_rejects_mixed_hops() {
        let a = track(&[0.0], 0.01, 0.0);
        let b = track(&[0.0], 0.02, 0.0);
        assert!(matches!(
            aggregate_window_logits(&[a, b]),
            Err(Error::InconsistentFrameHop { .. })
        ));
    }

    #[test]
    fn aggregate_matches_counting_oracle() {
        // 5 windows of 2 s at 1 s steps, 10 ms hop.
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let tracks: Vec<VadTrack> = (0..5)
            .map(|k| {
                let v: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
                track(&v, 0.01, k as f64)
            })
            .collect();
        let out = aggregate_window_logits(&tracks).unwrap();
        assert_eq!(out.len(), 600);
        // Per-frame accumulate-and-divide oracle.
        let mut sums = vec![0.0; 600];
        let mut counts = vec![0u32; 600];
        for (k, t) in tracks.iter().enumerate() {
            for (i, &v) in t.v.iter().enumerate() {
                sums[k * 100 + i] += v;
                counts[k * 100 + i] += 1;
            }
        }
        for i in 0..600 {
            assert!((out.v[i] - sums[i] / counts[i] as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_concatenates_disjoint_windows() {
        let a = track(&[1.0, 2.0], 0.01, 0.0);
        let b = track(&[3.0, 4.0], 0.01, 0.02);
        let out = aggregate_window_logits(&[a, b]).unwrap();
        assert_eq!(out.v, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn hysteresis_nothing_above_on_threshold() {
        let t = track(&[0.1, 0.4, 0.2], 0.01, 0.0);
        let cfg = HysteresisConfig { theta_on: 0.9, theta_off: 0.5, ..Default::default() };
        assert!(hysteresis_segments(&t, &cfg).unwrap().is_empty());
    }

    #[test]
    fn hysteresis_two_threshold_automaton_hand_trace() {
        let t = track(&[0.0, 1.0, 0.6, 0.2, 0.0], 0.01, 0.0);
        let cfg = HysteresisConfig { theta_on: 0.9, theta_off: 0.5, ..Default::default() };
        let segs = hysteresis_segments(&t, &cfg).unwrap();
        assert_eq!(segs.len(), 1);
        assert!((segs[0].onset_s - 0.01).abs() < 1e-12);
        assert!((segs[0].offset_s - 0.03).abs() < 1e-12);
    }

    #[test]
    fn hysteresis_equal_thresholds_is_simple_thresholding() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let v: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t = track(&v, 0.01, 0.0);
        let theta = 0.2;
        let cfg = HysteresisConfig { theta_on: theta, theta_off: theta, ..Default::default() };
        let segs = hysteresis_segments(&t, &cfg).unwrap();
        // Simple thresholding oracle.
        let mut expected = Vec::new();
        let mut start: Option<usize> = None;
        for (i, &x) in v.iter().enumerate() {
            if x >= theta && start.is_none() {
                start = Some(i);
            } else if x < theta {
                if let Some(s) = start.take() {
                    expected.push((s, i));
                }
            }
        }
        if let Some(s) = start {
            expected.push((s, v.len()));
        }
        assert_eq!(segs.len(), expected.len());
        for (seg, (s, e)) in segs.iter().zip(expected) {
            assert!((seg.onset_s - s as f64 * 0.01).abs() < 1e-12);
            assert!((seg.offset_s - e as f64 * 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn hysteresis_open_at_end_closes_at_track_end() {
        let t = track(&[0.0, 1.0, 1.0], 0.01, 1.0);
        let cfg = HysteresisConfig { theta_on: 0.5, theta_off: 0.0, ..Default::default() };
        let segs = hysteresis_segments(&t, &cfg).unwrap();
        assert_eq!(segs.len(), 1);
        assert!((segs[0].onset_s - 1.01).abs() < 1e-12);
        assert!((segs[0].offset_s - 1.03).abs() < 1e-12);
    }

    #[test]
    fn hysteresis_rejects_inverted_thresholds() {
        let t = track(&[0.0], 0.01, 0.0);
        let cfg = HysteresisConfig { theta_on: 0.0, theta_off: 0.5, ..Default::default() };
        assert!(matches!(hysteresis_segments(&t, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn postprocess_noop_config_keeps_input() {
        let segs = vec![Segment::new(0.0, 1.0), Segment::new(1.05, 2.0)];
        let cfg = HysteresisConfig { min_dur_s: 0.0, max_gap_s: 0.0, ..Default::default() };
        assert_eq!(postprocess_segments(&segs, &cfg), segs);
    }

    #[test]
    fn postprocess_merges_small_gap() {
        let segs = vec![Segment::new(0.0, 1.0), Segment::new(1.05, 2.0)];
        let cfg = HysteresisConfig { min_dur_s: 0.0, max_gap_s: 0.1, ..Default::default() };
        assert_eq!(postprocess_segments(&segs, &cfg), vec![Segment::new(0.0, 2.0)]);
    }

    #[test]
    fn postprocess_merges_before_dropping() {
        // Three short pieces chain-merge into one long segment, so the
        // min-duration filter keeps it.
        let segs = vec![
            Segment::new(0.0, 0.1),
            Segment::new(0.15, 0.25),
            Segment::new(0.3, 0.4),
        ];
        let cfg = HysteresisConfig { min_dur_s: 0.3, max_gap_s: 0.1, ..Default::default() };
        assert_eq!(postprocess_segments(&segs, &cfg), vec![Segment::new(0.0, 0.4)]);
    }

    #[test]
    fn postprocess_matches_fixpoint_merge_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let n = rng.random_range(0..20);
            let mut segs = Vec::new();
            let mut t = 0.0;
            for _ in 0..n {
                t += rng.random_range(0.01..0.5);
                let d = rng.random_range(0.01..0.6);
                segs.push(Segment::new(t, t + d));
                t += d;
            }
            let cfg = HysteresisConfig {
                min_dur_s: rng.random_range(0.0..0.4),
                max_gap_s: rng.random_range(0.0..0.4),
                ..Default::default()
            };
            // O(n^2) repeated-scan oracle: merge any adjacent pair until
            // fixpoint, then drop the short ones.
            let mut oracle = segs.clone();
            loop {
                let mut changed = false;
                let mut i = 0;
                while i + 1 < oracle.len() {
                    if oracle[i + 1].onset_s - oracle[i].offset_s <= cfg.max_gap_s {
                        oracle[i].offset_s = oracle[i].offset_s.max(oracle[i + 1].offset_s);
                        oracle.remove(i + 1);
                        changed = true;
                    } else {
                        i += 1;
                    }
                }
                if !changed {
                    break;
                }
            }
            oracle.retain(|s| s.duration() >= cfg.min_dur_s);
            assert_eq!(postprocess_segments(&segs, &cfg), oracle);
        }
    }

    #[test]
    fn gate_empty_segments_discards_everything() {
        let windows = vec![emb(0.0, 2.0), emb(1.0, 3.0)];
        assert!(gate_windows(&[], &windows).is_empty());
    }

    #[test]
    fn gate_keeps_boundary_overlap() {
        let windows = vec![emb(0.0, 2.0)];
        let segs = vec![Segment::new(1.9, 3.0)];
        assert_eq!(gate_windows(&segs, &windows).len(), 1);
        // Touching without positive overlap is discarded.
        let segs = vec![Segment::new(2.0, 3.0)];
        assert!(gate_windows(&segs, &windows).is_empty());
    }

    #[test]
    fn gate_matches_pairwise_intersection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..100 {
            let windows: Vec<SpeakerEmbedding> = (0..rng.random_range(1..10))
                .map(|_| {
                    let s = rng.random_range(0.0..10.0);
                    emb(s, s + rng.random_range(0.1..3.0))
                })
                .collect();
            let segs: Vec<Segment> = (0..rng.random_range(0..8))
                .map(|_| {
                    let s = rng.random_range(0.0..10.0);
                    Segment::new(s, s + rng.random_range(0.05..2.0))
                })
                .collect();
            let kept = gate_window_indices(&segs, &windows);
            let expected: Vec<usize> = windows
                .iter()
                .enumerate()
                .filter(|(_, w)| {
                    segs.iter().any(|s| {
                        let lo = s.onset_s.max(w.window_start_s);
                        let hi = s.offset_s.min(w.window_end_s);
                        hi - lo > 0.0
                    })
                })
                .map(|(i, _)| i)
                .collect();
            assert_eq!(kept, expected);
        }
    }
}
