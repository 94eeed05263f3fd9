//! Diarization and VAD scoring with a forgiveness collar, optional
//! overlap exclusion, and optimal speaker mapping.
//!
//! All interval work is exact endpoint arithmetic on [`Timeline`]s;
//! nothing is ever sampled onto a grid.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::assignment::{assignment_weight, max_weight_assignment};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::segment::LabeledSegment;
use crate::timeline::{coverage_at_least, Timeline};

/// Scoring protocol knobs.
///
/// `collar_s` is the total width of the forgiveness window: each
/// reference boundary excludes `[b - collar/2, b + collar/2]` from
/// scoring. `skip_overlap` additionally excludes time where two or more
/// reference speakers talk at once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub collar_s: f64,
    pub skip_overlap: bool,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { collar_s: 0.25, skip_overlap: false }
    }
}

impl ScoreConfig {
    /// AMI protocol: 0.25 s collar, overlap regions not scored.
    pub fn ami() -> Self {
        Self { collar_s: 0.25, skip_overlap: true }
    }

    /// VoxConverse protocol: 0.25 s collar, overlaps scored.
    pub fn voxconverse() -> Self {
        Self { collar_s: 0.25, skip_overlap: false }
    }

    /// DIHARD protocol: no collar, overlaps scored.
    pub fn dihard() -> Self {
        Self { collar_s: 0.0, skip_overlap: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.collar_s.is_finite() || self.collar_s < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "collar_s must be finite and non-negative, got {}",
                self.collar_s
            )));
        }
        Ok(())
    }
}

/// Error durations in seconds plus the denominator they are rated
/// against: scored reference speaker time for diarization, scored
/// wall-clock time for VAD.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScoreReport {
    pub false_alarm_s: f64,
    pub missed_s: f64,
    pub confusion_s: f64,
    pub scored_speech_s: f64,
}

impl ScoreReport {
    fn pct(&self, x: f64) -> f64 {
        if self.scored_speech_s > 0.0 {
            100.0 * x / self.scored_speech_s
        } else {
            0.0
        }
    }

    pub fn false_alarm_pct(&self) -> f64 {
        self.pct(self.false_alarm_s)
    }

    pub fn missed_pct(&self) -> f64 {
        self.pct(self.missed_s)
    }

    pub fn confusion_pct(&self) -> f64 {
        self.pct(self.confusion_s)
    }

    /// False alarm plus miss, in percent.
    pub fn vad_error_pct(&self) -> f64 {
        self.pct(self.false_alarm_s + self.missed_s)
    }

    /// False alarm plus miss plus confusion, in percent.
    pub fn der_pct(&self) -> f64 {
        self.pct(self.false_alarm_s + self.missed_s + self.confusion_s)
    }
}

impl core::ops::Add for ScoreReport {
    type Output = ScoreReport;

    /// Corpus totals add durations; rates are computed from the summed
    /// durations, never averaged.
    fn add(self, other: ScoreReport) -> ScoreReport {
        ScoreReport {
            false_alarm_s: self.false_alarm_s + other.false_alarm_s,
            missed_s: self.missed_s + other.missed_s,
            confusion_s: self.confusion_s + other.confusion_s,
            scored_speech_s: self.scored_speech_s + other.scored_speech_s,
        }
    }
}

/// The parts of the timeline a scoring run ignores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringRegions {
    pub excluded: Timeline,
}

impl ScoringRegions {
    /// Restrict a timeline to the scored part.
    pub fn scored_view(&self, t: &Timeline) -> Timeline {
        t.subtract(&self.excluded)
    }

    pub fn is_everything_scored(&self) -> bool {
        self.excluded.is_empty()
    }
}

/// Excluded time derived from the reference: a collar around every
/// segment boundary, plus multi-speaker regions when `skip_overlap` is
/// set.
pub fn scoring_regions(reference: &[LabeledSegment], cfg: &ScoreConfig) -> Result<ScoringRegions> {
    cfg.validate()?;
    let mut spans: Vec<(f64, f64)> = Vec::new();
    let half = cfg.collar_s / 2.0;
    if half > 0.0 {
        for s in reference {
            spans.push(((s.onset_s - half).max(0.0), s.onset_s + half));
            spans.push(((s.offset_s - half).max(0.0), s.offset_s + half));
        }
    }
    if cfg.skip_overlap {
        // Union per speaker first so a speaker overlapping with
        // themselves does not count as two.
        let per_speaker = speaker_timelines(reference);
        let all = per_speaker
            .values()
            .flat_map(|t| t.spans().iter().copied());
        spans.extend(coverage_at_least(all, 2).spans().iter().copied());
    }
    Ok(ScoringRegions { excluded: Timeline::from_intervals(spans) })
}

/// VAD scoring: false alarm is hypothesis speech over reference
/// non-speech, miss the reverse, both restricted to scored time. Rates
/// are percent of the scored wall clock from 0 to the later of the two
/// extents.
pub fn vad_error(
    reference: &[LabeledSegment],
    hypothesis: &[LabeledSegment],
    cfg: &ScoreConfig,
) -> Result<ScoreReport> {
    let regions = scoring_regions(reference, cfg)?;
    let ref_speech = union_of(reference);
    let hyp_speech = union_of(hypothesis);
    let extent = ref_speech.end().max(hyp_speech.end());
    let scored = regions.scored_view(&Timeline::span(0.0, extent));
    Ok(ScoreReport {
        false_alarm_s: hyp_speech.subtract(&ref_speech).intersect(&scored).duration(),
        missed_s: ref_speech.subtract(&hyp_speech).intersect(&scored).duration(),
        confusion_s: 0.0,
        scored_speech_s: scored.duration(),
    })
}

/// Diarization scoring.
///
/// Reference and hypothesis speakers are paired one-to-one by maximal
/// total overlap. Misses and false alarms come from speaker-count
/// differences, so doubly covered reference time can be missed twice;
/// confusion is concurrently active time attributed to the wrong
/// speaker. The denominator is scored reference speaker time.
pub fn der(
    reference: &[LabeledSegment],
    hypothesis: &[LabeledSegment],
    cfg: &ScoreConfig,
) -> Result<ScoreReport> {
    let regions = scoring_regions(reference, cfg)?;
    let ref_tl: Vec<Timeline> = speaker_timelines(reference)
        .into_values()
        .map(|t| regions.scored_view(&t))
        .collect();
    let hyp_tl: Vec<Timeline> = speaker_timelines(hypothesis)
        .into_values()
        .map(|t| regions.scored_view(&t))
        .collect();
    let scored_speech_s: f64 = ref_tl.iter().map(Timeline::duration).sum();

    // Sweep speaker-count differences over all span boundaries.
    let mut events: Vec<(f64, i32, i32)> = Vec::new();
    for t in &ref_tl {
        for &(s, e) in t.spans() {
            events.push((s, 1, 0));
            events.push((e, -1, 0));
        }
    }
    for t in &hyp_tl {
        for &(s, e) in t.spans() {
            events.push((s, 0, 1));
            events.push((e, 0, -1));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut missed_s = 0.0;
    let mut false_alarm_s = 0.0;
    let mut concurrent_s = 0.0;
    let (mut n_ref, mut n_hyp) = (0i32, 0i32);
    let mut prev = f64::NEG_INFINITY;
    for &(t, dr, dh) in &events {
        if t > prev && prev > f64::NEG_INFINITY {
            let dt = t - prev;
            missed_s += (n_ref - n_hyp).max(0) as f64 * dt;
            false_alarm_s += (n_hyp - n_ref).max(0) as f64 * dt;
            concurrent_s += n_ref.min(n_hyp) as f64 * dt;
        }
        n_ref += dr;
        n_hyp += dh;
        prev = t;
    }

    // Best one-to-one speaker pairing by overlap duration.
    let mut w = Mat::zeros(ref_tl.len(), hyp_tl.len());
    for (i, r) in ref_tl.iter().enumerate() {
        for (j, h) in hyp_tl.iter().enumerate() {
            w[(i, j)] = r.intersect(h).duration();
        }
    }
    let matched_s = assignment_weight(&w, &max_weight_assignment(&w));
    Ok(ScoreReport {
        false_alarm_s,
        missed_s,
        confusion_s: (concurrent_s - matched_s).max(0.0),
        scored_speech_s,
    })
}

fn union_of(segments: &[LabeledSegment]) -> Timeline {
    Timeline::from_intervals(segments.iter().map(|s| (s.onset_s, s.offset_s)))
}

fn speaker_timelines(segments: &[LabeledSegment]) -> BTreeMap<String, Timeline> {
    let mut spans: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for s in segments {
        spans
            .entry(s.speaker.clone())
            .or_default()
            .push((s.onset_s, s.offset_s));
    }
    spans
        .into_iter()
        .map(|(k, v)| (k, Timeline::from_intervals(v)))
        .collect()
}
