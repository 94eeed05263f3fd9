//! Text formats: speech segment lists, frame label files, boundary lists.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use diapipe_core::segment::Segment;

/// Parse `onset_s offset_s` pairs, one per line. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_segments(text: &str) -> Result<Vec<Segment>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            bail!("line {}: expected 2 fields, got {}", i + 1, fields.len());
        }
        let parse = |f: &str, what: &str| -> Result<f64> {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .with_context(|| format!("line {}: bad {what} {f:?}", i + 1))
        };
        let onset = parse(fields[0], "onset")?;
        let offset = parse(fields[1], "offset")?;
        if onset < 0.0 || offset <= onset {
            bail!("line {}: segment [{onset}, {offset}) is not a forward interval", i + 1);
        }
        out.push(Segment::new(onset, offset));
    }
    Ok(out)
}

pub fn format_segments(segments: &[Segment]) -> String {
    let mut out = String::new();
    for s in segments {
        writeln!(out, "{:.3} {:.3}", s.onset_s, s.offset_s).unwrap();
    }
    out
}

pub fn read_segments(path: &Path) -> Result<Vec<Segment>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading segments from {}", path.display()))?;
    parse_segments(&text).with_context(|| format!("parsing segments from {}", path.display()))
}

/// One label per line, no comment syntax: labels are arbitrary strings.
pub fn read_labels(path: &Path) -> Result<Vec<String>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading labels from {}", path.display()))?;
    Ok(text.lines().map(|l| l.trim().to_string()).collect())
}

/// One frame index per line, parallel to the analyzed track list.
pub fn read_boundaries(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading boundaries from {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<usize>()
                .with_context(|| format!("{}: line {}: bad frame index {l:?}", path.display(), i + 1))
        })
        .collect()
}
