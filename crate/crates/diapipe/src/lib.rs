//! File formats, configuration, and command plumbing around `diapipe-core`.
//!
//! The core crate holds the math; this one holds everything that touches
//! the filesystem: the FMV1 binary container, segment and RTTM text files,
//! run configuration with protocol presets, corpus manifests, score tables,
//! and the bodies of the CLI commands.

use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

pub mod config;
pub mod fmv1;
pub mod manifest;
pub mod report;
pub mod run;
pub mod segio;

/// Write via a temp file in the target directory plus a rename, so readers
/// and concurrent workers never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path).with_context(|| format!("replacing {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_atomic_replaces_existing_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        // No temp files left behind.
        let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }
}
