//! Single-step diarization: one pass over the recording yields both the
//! VAD decision and the speaker embeddings, which are then clustered and
//! mapped back onto the detected speech.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::cluster::{cluster, ClusterConfig};
use crate::error::{Error, Result};
use crate::pool::{pool_window, AttentionParams, FrameFeatureMatrix, SpeakerEmbedding, VadTrack};
use crate::segment::{
    aggregate_window_logits, gate_window_indices, hysteresis_segments, postprocess_segments,
    HysteresisConfig, LabeledSegment, Segment, WindowConfig,
};
use crate::timeline::{Timeline, MERGE_EPS};

/// Everything the end-to-end run needs.
///
/// `oracle_vad` replaces the detected speech segments (hysteresis and
/// post-processing are skipped); `oracle_n` pins the speaker count
/// instead of the eigengap estimate.
#[derive(Debug, Clone, Default)]
pub struct PipelineConfig {
    pub window: WindowConfig,
    pub hysteresis: HysteresisConfig,
    pub cluster: ClusterConfig,
    pub oracle_vad: Option<Vec<Segment>>,
    pub oracle_n: Option<usize>,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        self.hysteresis.validate()?;
        self.cluster.validate()
    }
}

/// Final single-label diarization output for one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct DiarizationHypothesis {
    pub recording_id: String,
    pub segments: Vec<LabeledSegment>,
}

impl DiarizationHypothesis {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Cut the recording into sliding windows of `window.width_s` every
/// `window.step_s`, snapped to the frame grid. The final window is
/// truncated at the recording end, and iteration stops once a window
/// reaches it, so every frame is covered at least once.
pub fn window_features(
    h: &FrameFeatureMatrix,
    window: &WindowConfig,
) -> Result<Vec<FrameFeatureMatrix>> {
    window.validate()?;
    let t = h.num_frames();
    let hop = h.frame_hop_s;
    let mut out = Vec::new();
    for k in 0.. {
        let raw_start = k as f64 * window.step_s;
        let from = libm::round(raw_start / hop) as usize;
        if from >= t {
            break;
        }
        let to = (libm::round((raw_start + window.width_s) / hop) as usize).min(t);
        let to = to.max(from + 1);
        out.push(h.slice_frames(from, to)?);
        if to == t {
            break;
        }
    }
    Ok(out)
}

/// Attribute each speech segment to speakers by cutting it at the
/// midpoints between gated-window centers: every instant takes the label
/// of the nearest window center (the earlier window when centers tie).
/// Adjacent same-label pieces coalesce, cluster indices are renamed
/// `spk00`, `spk01`, ... in order of first appearance, and the output
/// union equals the input segments exactly.
pub fn assign_labels(
    recording_id: &str,
    segments: &[Segment],
    windows: &[(SpeakerEmbedding, usize)],
) -> Result<DiarizationHypothesis> {
    if segments.is_empty() {
        return Ok(DiarizationHypothesis {
            recording_id: recording_id.to_string(),
            segments: Vec::new(),
        });
    }
    let speech = Timeline::from_segments(segments);
    let covered = Timeline::from_intervals(
        windows
            .iter()
            .map(|(w, _)| (w.window_start_s, w.window_end_s)),
    );
    // Float jitter at window edges can leave slivers; anything beyond
    // the merge epsilon is genuinely uncovered speech.
    if let Some(&(onset, offset)) = speech
        .subtract(&covered)
        .spans()
        .iter()
        .find(|(s, e)| e - s > MERGE_EPS)
    {
        return Err(Error::UncoveredSpeech { onset, offset });
    }

    // Windows ordered by center; when centers tie exactly, only the
    // earlier window is kept so it wins the shared region.
    let mut order: Vec<usize> = (0..windows.len()).collect();
    order.sort_by(|&a, &b| windows[a].0.center_s().total_cmp(&windows[b].0.center_s()));
    let mut centers: Vec<f64> = Vec::with_capacity(order.len());
    let mut labels: Vec<usize> = Vec::with_capacity(order.len());
    for &i in &order {
        let c = windows[i].0.center_s();
        if centers.last() != Some(&c) {
            centers.push(c);
            labels.push(windows[i].1);
        }
    }

    let mut pieces: Vec<(f64, f64, usize)> = Vec::new();
    for seg in segments {
        let mut cursor = seg.onset_s;
        // First center whose region reaches into the segment.
        let mut idx = centers
            .iter()
            .zip(centers.iter().skip(1))
            .take_while(|(c0, c1)| midpoint(**c0, **c1) <= cursor)
            .count();
        while cursor < seg.offset_s {
            let region_end = if idx + 1 < centers.len() {
                midpoint(centers[idx], centers[idx + 1]).min(seg.offset_s)
            } else {
                seg.offset_s
            };
            if region_end > cursor {
                match pieces.last_mut() {
                    Some(last) if last.2 == labels[idx] && last.1 == cursor => {
                        last.1 = region_end;
                    }
                    _ => pieces.push((cursor, region_end, labels[idx])),
                }
                cursor = region_end;
            }
            idx += 1;
        }
    }

    // Cluster indices become speaker names in order of first appearance.
    let max_cluster = windows.iter().map(|(_, l)| l + 1).max().unwrap_or(1);
    let mut name_of: Vec<Option<String>> = alloc::vec![None; max_cluster];
    let mut next = 0usize;
    let mut out = Vec::with_capacity(pieces.len());
    for (onset, offset, cluster_idx) in pieces {
        let name = name_of[cluster_idx].get_or_insert_with(|| {
            let name = alloc::format!("spk{next:02}");
            next += 1;
            name
        });
        out.push(LabeledSegment::new(onset, offset, name.clone()));
    }
    Ok(DiarizationHypothesis {
        recording_id: recording_id.to_string(),
        segments: out,
    })
}

fn midpoint(a: f64, b: f64) -> f64 {
    0.5 * (a + b)
}

/// The whole single-step pipeline for one recording.
pub fn diarize(
    h: &FrameFeatureMatrix,
    params: &AttentionParams,
    cfg: &PipelineConfig,
    recording_id: &str,
) -> Result<DiarizationHypothesis> {
    cfg.validate()?;
    let windows = window_features(h, &cfg.window)?;
    let mut embeddings: Vec<SpeakerEmbedding> = Vec::with_capacity(windows.len());
    let mut tracks: Vec<VadTrack> = Vec::with_capacity(windows.len());
    for w in &windows {
        let (embedding, track) = pool_window(w, params)?;
        embeddings.push(embedding);
        tracks.push(track);
    }
    let segments = match &cfg.oracle_vad {
        Some(oracle) => Timeline::from_segments(oracle)
            .spans()
            .iter()
            .map(|&(s, e)| Segment::new(s, e))
            .collect(),
        None => {
            let aggregated = aggregate_window_logits(&tracks)?;
            let raw = hysteresis_segments(&aggregated, &cfg.hysteresis)?;
            postprocess_segments(&raw, &cfg.hysteresis)
        }
    };
    if segments.is_empty() {
        return Ok(DiarizationHypothesis {
            recording_id: recording_id.to_string(),
            segments: Vec::new(),
        });
    }
    let gated_idx = gate_window_indices(&segments, &embeddings);
    let gated: Vec<SpeakerEmbedding> = gated_idx.iter().map(|&i| embeddings[i].clone()).collect();
    if gated.is_empty() {
        let (onset, offset) = (segments[0].onset_s, segments[0].offset_s);
        return Err(Error::UncoveredSpeech { onset, offset });
    }
    let result = cluster(&gated, cfg.oracle_n, &cfg.cluster)?;
    let labeled: Vec<(SpeakerEmbedding, usize)> =
        gated.into_iter().zip(result.labels).collect();
    assign_labels(recording_id, &segments, &labeled)
}
