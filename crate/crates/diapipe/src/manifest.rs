//! Corpus manifest: one recording per line for batch runs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

/// One corpus entry. Paths are resolved against the manifest's directory
/// unless absolute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub recording_id: String,
    pub feature_path: PathBuf,
    pub ref_rttm_path: PathBuf,
}

/// Parse `recording_id feature_path ref_rttm_path` lines. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let resolve = |p: &str| -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            bail!("line {}: expected 3 fields (recording_id feature_path ref_rttm_path), got {}", i + 1, fields.len());
        }
        out.push(ManifestEntry {
            recording_id: fields[0].to_string(),
            feature_path: resolve(fields[1]),
            ref_rttm_path: resolve(fields[2]),
        });
    }
    if out.is_empty() {
        bail!("manifest lists no recordings");
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&text, base).with_context(|| format!("parsing manifest {}", path.display()))
}
