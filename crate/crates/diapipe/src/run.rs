//! Command bodies behind the CLI, callable as plain functions.
//!
//! The binary only parses flags and forwards here, so a test (or another
//! tool) invoking these functions gets byte-identical results to the CLI.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use diapipe_core::analysis::{group_mean_response, transition_profile, FrameLabelTrack};
use diapipe_core::pipeline::{diarize, window_features, DiarizationHypothesis};
use diapipe_core::pool::{attention_logits, vad_logits, AttentionParams, FrameFeatureMatrix, VadTrack};
use diapipe_core::rttm::{parse_rttm, records_from_segments, segments_by_recording, write_rttm};
use diapipe_core::score::{der, vad_error, ScoreReport};
use diapipe_core::segment::{
    aggregate_window_logits, hysteresis_segments, postprocess_segments, LabeledSegment, Segment,
};

use crate::config::RunConfig;
use crate::manifest::ManifestEntry;
use crate::report::{der_table, vad_table, ReportRow};
use crate::{fmv1, segio, write_atomic};

/// How to time-stamp CSV feature inputs, which carry no header.
#[derive(Debug, Clone, Copy)]
pub struct CsvTiming {
    pub frame_hop_s: f64,
    pub start_s: f64,
}

impl Default for CsvTiming {
    fn default() -> Self {
        Self { frame_hop_s: 0.01, start_s: 0.0 }
    }
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes())
            .with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Speech segments plus the aggregated logit track for one recording.
pub fn vad_segments(
    h: &FrameFeatureMatrix,
    params: &AttentionParams,
    cfg: &RunConfig,
) -> Result<(Vec<Segment>, VadTrack)> {
    let windows = window_features(h, &cfg.window)?;
    let tracks = windows
        .iter()
        .map(|w| Ok(vad_logits(&attention_logits(w, params)?)))
        .collect::<Result<Vec<_>>>()?;
    let aggregated = aggregate_window_logits(&tracks)?;
    let raw = hysteresis_segments(&aggregated, &cfg.hysteresis)?;
    Ok((postprocess_segments(&raw, &cfg.hysteresis), aggregated))
}

pub fn run_vad(
    features: &Path,
    params: &Path,
    cfg: &RunConfig,
    timing: CsvTiming,
    out: Option<&Path>,
    logits_out: Option<&Path>,
) -> Result<()> {
    let h = fmv1::read_features(features, timing.frame_hop_s, timing.start_s)?;
    let p = fmv1::read_params(params)?;
    let (segments, track) = vad_segments(&h, &p, cfg)?;
    if let Some(path) = logits_out {
        fmv1::write_track(path, &track)?;
    }
    write_text(out, &segio::format_segments(&segments))
}

fn default_recording_id(features: &Path) -> String {
    features
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "recording".to_string())
}

/// Full pipeline for one recording, returning the hypothesis rather than
/// writing it, for callers that score in-process.
pub fn diarize_file(
    features: &Path,
    params: &AttentionParams,
    cfg: &RunConfig,
    timing: CsvTiming,
    oracle_vad: Option<&Path>,
    oracle_n: Option<usize>,
    recording_id: &str,
) -> Result<DiarizationHypothesis> {
    let h = fmv1::read_features(features, timing.frame_hop_s, timing.start_s)?;
    let oracle = oracle_vad.map(segio::read_segments).transpose()?;
    let pipeline = cfg.pipeline_config(oracle, oracle_n);
    Ok(diarize(&h, params, &pipeline, recording_id)?)
}

#[allow(clippy::too_many_arguments)]
pub fn run_diarize(
    features: &Path,
    params: &Path,
    cfg: &RunConfig,
    timing: CsvTiming,
    oracle_vad: Option<&Path>,
    oracle_n: Option<usize>,
    recording_id: Option<&str>,
    out: Option<&Path>,
) -> Result<()> {
    let p = fmv1::read_params(params)?;
    let rec_id = recording_id.map(str::to_string).unwrap_or_else(|| default_recording_id(features));
    let hyp = diarize_file(features, &p, cfg, timing, oracle_vad, oracle_n, &rec_id)?;
    write_text(out, &write_rttm(&records_from_segments(&rec_id, &hyp.segments)))
}

fn read_rttm_grouped(path: &Path) -> Result<BTreeMap<String, Vec<LabeledSegment>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let records = parse_rttm(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(segments_by_recording(&records))
}

fn score_pair(
    refs: &[LabeledSegment],
    hyp: &[LabeledSegment],
    cfg: &RunConfig,
    vad_mode: bool,
) -> Result<ScoreReport> {
    let report = if vad_mode {
        vad_error(refs, hyp, &cfg.score)?
    } else {
        der(refs, hyp, &cfg.score)?
    };
    Ok(report)
}

/// Score one hypothesis RTTM against one reference RTTM. Both files may
/// hold several recordings; rows pair them up by recording id.
pub fn run_score_files(
    ref_path: &Path,
    hyp_path: &Path,
    cfg: &RunConfig,
    vad_mode: bool,
    out: Option<&Path>,
) -> Result<()> {
    let refs = read_rttm_grouped(ref_path)?;
    let hyps = read_rttm_grouped(hyp_path)?;
    let empty = Vec::new();
    let ids: std::collections::BTreeSet<&String> = refs.keys().chain(hyps.keys()).collect();
    let mut rows = Vec::new();
    for id in ids {
        let report = score_pair(
            refs.get(id).unwrap_or(&empty),
            hyps.get(id).unwrap_or(&empty),
            cfg,
            vad_mode,
        )
        .with_context(|| format!("scoring recording {id}"))?;
        rows.push(ReportRow { recording_id: id.clone(), report });
    }
    let table = if vad_mode { vad_table(&rows) } else { der_table(&rows) };
    write_text(out, &table)
}

fn thread_count(jobs: usize) -> usize {
    let cap = std::env::var("DIAPIPE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0);
    let hw = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    cap.unwrap_or(hw).clamp(1, jobs.max(1))
}

/// Reference segments for one recording from its reference RTTM. A file
/// holding exactly one recording is accepted under any id; a multi-
/// recording file must contain the requested id.
fn reference_for(path: &Path, recording_id: &str) -> Result<Vec<LabeledSegment>> {
    let mut grouped = read_rttm_grouped(path)?;
    if let Some(segs) = grouped.remove(recording_id) {
        return Ok(segs);
    }
    if grouped.is_empty() {
        return Ok(Vec::new());
    }
    if grouped.len() == 1 {
        return Ok(grouped.into_values().next().unwrap());
    }
    bail!(
        "{} holds recordings {:?}, none named {recording_id:?}",
        path.display(),
        grouped.keys().collect::<Vec<_>>()
    )
}

fn score_manifest_entry(
    entry: &ManifestEntry,
    params: &AttentionParams,
    cfg: &RunConfig,
    vad_mode: bool,
    out_dir: Option<&Path>,
) -> Result<ReportRow> {
    let h = fmv1::read_features(&entry.feature_path, 0.01, 0.0)?;
    let pipeline = cfg.pipeline_config(None, None);
    let hyp = diarize(&h, params, &pipeline, &entry.recording_id)?;
    if let Some(dir) = out_dir {
        let rttm = write_rttm(&records_from_segments(&entry.recording_id, &hyp.segments));
        write_atomic(&dir.join(format!("{}.rttm", entry.recording_id)), rttm.as_bytes())?;
    }
    let refs = reference_for(&entry.ref_rttm_path, &entry.recording_id)?;
    let report = score_pair(&refs, &hyp.segments, cfg, vad_mode)?;
    Ok(ReportRow { recording_id: entry.recording_id.clone(), report })
}

/// Diarize and score every manifest entry, in a worker pool capped by
/// `DIAPIPE_THREADS`. Rows keep manifest order however the pool schedules.
pub fn run_score_manifest(
    manifest_path: &Path,
    params_path: &Path,
    cfg: &RunConfig,
    vad_mode: bool,
    out_dir: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let entries = crate::manifest::read_manifest(manifest_path)?;
    let params = fmv1::read_params(params_path)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let slots: Vec<Mutex<Option<Result<ReportRow>>>> =
        entries.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..thread_count(entries.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(entry) = entries.get(i) else { break };
                let row = score_manifest_entry(entry, &params, cfg, vad_mode, out_dir)
                    .with_context(|| format!("recording {}", entry.recording_id));
                *slots[i].lock().unwrap() = Some(row);
            });
        }
    });
    let rows = slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker pool covered every entry"))
        .collect::<Result<Vec<_>>>()?;
    let table = if vad_mode { vad_table(&rows) } else { der_table(&rows) };
    write_text(out, &table)
}

/// Per-label logit statistics as CSV.
pub fn run_analyze_group(track_path: &Path, labels_path: &Path, out: Option<&Path>) -> Result<()> {
    let track = fmv1::read_track(track_path)?;
    let labels = segio::read_labels(labels_path)?;
    let label_track = FrameLabelTrack { labels, frame_hop_s: track.frame_hop_s };
    let groups = group_mean_response(&track, &label_track)?;
    let mut csv = String::from("label,mean,std,count\n");
    for g in &groups {
        writeln!(csv, "{},{},{},{}", g.label, g.mean, g.std, g.count).unwrap();
    }
    write_text(out, &csv)
}

/// Boundary-aligned mean logit profile as CSV. Returns the number of
/// tracks skipped for missing context so the CLI can warn.
pub fn run_analyze_transition(
    track_paths: &[PathBuf],
    boundaries_path: &Path,
    half_width: usize,
    out: Option<&Path>,
) -> Result<usize> {
    let tracks = track_paths
        .iter()
        .map(|p| fmv1::read_track(p))
        .collect::<Result<Vec<_>>>()?;
    let boundaries = segio::read_boundaries(boundaries_path)?;
    if boundaries.len() != tracks.len() {
        bail!(
            "{} boundary indices for {} tracks; expected one per track",
            boundaries.len(),
            tracks.len()
        );
    }
    let profile = transition_profile(&tracks, &boundaries, half_width)?;
    let mut csv = String::from("offset,mean,std\n");
    for ((off, mean), std) in profile.offsets.iter().zip(&profile.mean).zip(&profile.std) {
        writeln!(csv, "{off},{mean},{std}").unwrap();
    }
    write_text(out, &csv)?;
    Ok(profile.skipped)
}
