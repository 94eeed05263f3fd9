//! Statistics over VAD logit tracks: per-label response means and
//! boundary-aligned transition profiles.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::pool::VadTrack;

/// Context kept on each side of a boundary when profiling transitions.
pub const DEFAULT_TRANSITION_HALF_WIDTH: usize = 40;

/// One label per frame (phoneme, SNR bucket, speech/non-speech, ...),
/// aligned with a logit track of the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLabelTrack {
    pub labels: Vec<String>,
    pub frame_hop_s: f64,
}

/// Logit statistics of one label group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupResponse {
    pub label: String,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub count: usize,
}

/// Boundary-aligned mean and spread of logit tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionProfile {
    /// Frame offsets relative to the boundary, `-half_width..=half_width`.
    pub offsets: Vec<i64>,
    pub mean: Vec<f64>,
    /// Population standard deviation across tracks, per offset.
    pub std: Vec<f64>,
    /// Tracks dropped for lacking `half_width` frames of context.
    pub skipped: usize,
}

/// Mean, spread and size of the logit distribution under each distinct
/// label, sorted by descending mean (ties alphabetically).
pub fn group_mean_response(
    track: &VadTrack,
    labels: &FrameLabelTrack,
) -> Result<Vec<GroupResponse>> {
    if labels.labels.len() != track.len() {
        return Err(Error::DimensionMismatch(format!(
            "label track has {} frames, logit track has {}",
            labels.labels.len(),
            track.len()
        )));
    }
    let mut groups: alloc::collections::BTreeMap<&str, (f64, f64, usize)> =
        alloc::collections::BTreeMap::new();
    for (label, &v) in labels.labels.iter().zip(&track.v) {
        let g = groups.entry(label).or_insert((0.0, 0.0, 0));
        g.0 += v;
        g.1 += v * v;
        g.2 += 1;
    }
    let mut out: Vec<GroupResponse> = groups
        .into_iter()
        .map(|(label, (sum, sum_sq, count))| {
            let mean = sum / count as f64;
            let var = (sum_sq / count as f64 - mean * mean).max(0.0);
            GroupResponse {
                label: String::from(label),
                mean,
                std: libm::sqrt(var),
                count,
            }
        })
        .collect();
    out.sort_by(|a, b| b.mean.total_cmp(&a.mean).then_with(|| a.label.cmp(&b.label)));
    Ok(out)
}

/// Align tracks at their boundary frame and average the logits at every
/// offset in `-half_width..=half_width`. Tracks without enough context
/// on either side are skipped and counted, not an error.
pub fn transition_profile(
    tracks: &[VadTrack],
    boundary_frames: &[usize],
    half_width: usize,
) -> Result<TransitionProfile> {
    if tracks.len() != boundary_frames.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} tracks but {} boundary frames",
            tracks.len(),
            boundary_frames.len()
        )));
    }
    let width = 2 * half_width + 1;
    let mut sum = alloc::vec![0.0; width];
    let mut sum_sq = alloc::vec![0.0; width];
    let mut used = 0usize;
    let mut skipped = 0usize;
    for (track, &b) in tracks.iter().zip(boundary_frames) {
        if b < half_width || b + half_width >= track.len() {
            skipped += 1;
            continue;
        }
        used += 1;
        for (j, slot) in sum.iter_mut().enumerate() {
            let v = track.v[b - half_width + j];
            *slot += v;
            sum_sq[j] += v * v;
        }
    }
    if used == 0 {
        return Err(Error::EmptyInput(
            "no track has enough context around its boundary".into(),
        ));
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / used as f64).collect();
    let std: Vec<f64> = sum_sq
        .iter()
        .zip(&mean)
        .map(|(&sq, &m)| libm::sqrt((sq / used as f64 - m * m).max(0.0)))
        .collect();
    let offsets: Vec<i64> = (0..width)
        .map(|j| j as i64 - half_width as i64)
        .collect();
    Ok(TransitionProfile { offsets, mean, std, skipped })
}
