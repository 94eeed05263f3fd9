//! RTTM speaker-segment records: parsing and canonical writing.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::segment::LabeledSegment;

/// One `SPEAKER` line of an RTTM file.
#[derive(Debug, Clone, PartialEq)]
pub struct RttmRecord {
    pub recording_id: String,
    pub channel: String,
    pub onset_s: f64,
    pub duration_s: f64,
    pub speaker_id: String,
}

impl RttmRecord {
    pub fn offset_s(&self) -> f64 {
        self.onset_s + self.duration_s
    }
}

/// Parse `SPEAKER <rec> <chan> <onset> <dur> <NA> <NA> <spk> <NA> <NA>`
/// lines. Blank lines and `;;` comments are skipped; anything else
/// malformed is an error carrying its 1-based line number.
pub fn parse_rttm(text: &str) -> Result<Vec<RttmRecord>> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with(";;") {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 10 {
            return Err(Error::RttmParse {
                line,
                message: format!("expected 10 fields, found {}", fields.len()),
            });
        }
        if fields[0] != "SPEAKER" {
            return Err(Error::RttmParse {
                line,
                message: format!("unsupported record type {:?}", fields[0]),
            });
        }
        let onset_s: f64 = fields[3].parse().map_err(|_| Error::RttmParse {
            line,
            message: format!("bad onset {:?}", fields[3]),
        })?;
        let duration_s: f64 = fields[4].parse().map_err(|_| Error::RttmParse {
            line,
            message: format!("bad duration {:?}", fields[4]),
        })?;
        if !onset_s.is_finite() || onset_s < 0.0 {
            return Err(Error::RttmParse {
                line,
                message: format!("onset must be finite and non-negative, got {onset_s}"),
            });
        }
        if !duration_s.is_finite() || duration_s <= 0.0 {
            return Err(Error::RttmParse {
                line,
                message: format!("duration must be finite and positive, got {duration_s}"),
            });
        }
        records.push(RttmRecord {
            recording_id: fields[1].to_string(),
            channel: fields[2].to_string(),
            onset_s,
            duration_s,
            speaker_id: fields[7].to_string(),
        });
    }
    Ok(records)
}

/// Canonical RTTM text: records sorted by recording, onset, speaker and
/// duration, times printed with 3 decimals.
pub fn write_rttm(records: &[RttmRecord]) -> String {
    let mut sorted: Vec<&RttmRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        a.recording_id
            .cmp(&b.recording_id)
            .then(a.onset_s.total_cmp(&b.onset_s))
            .then(a.speaker_id.cmp(&b.speaker_id))
            .then(a.duration_s.total_cmp(&b.duration_s))
    });
    let mut out = String::new();
    for r in sorted {
        out.push_str(&format!(
            "SPEAKER {} {} {:.3} {:.3} <NA> <NA> {} <NA> <NA>\n",
            r.recording_id, r.channel, r.onset_s, r.duration_s, r.speaker_id
        ));
    }
    out
}

/// Group records into labeled segments per recording.
pub fn segments_by_recording(records: &[RttmRecord]) -> BTreeMap<String, Vec<LabeledSegment>> {
    let mut out: BTreeMap<String, Vec<LabeledSegment>> = BTreeMap::new();
    for r in records {
        out.entry(r.recording_id.clone()).or_default().push(LabeledSegment::new(
            r.onset_s,
            r.offset_s(),
            r.speaker_id.clone(),
        ));
    }
    out
}

/// Records for one recording's labeled segments, channel fixed to 1.
pub fn records_from_segments(recording_id: &str, segments: &[LabeledSegment]) -> Vec<RttmRecord> {
    segments
        .iter()
        .map(|s| RttmRecord {
            recording_id: recording_id.to_string(),
            channel: "1".to_string(),
            onset_s: s.onset_s,
            duration_s: s.offset_s - s.onset_s,
            speaker_id: s.speaker.clone(),
        })
        .collect()
}
