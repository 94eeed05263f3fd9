//! Binary container for feature matrices, logit tracks, and model parameters.
//!
//! A block is: 4 magic bytes `FMV1`, u32 row count T, u32 column count C,
//! f64 frame hop in seconds, f64 start time in seconds, then T*C f32 values
//! in row-major order. All integers and floats are little-endian. Values are
//! stored as f32 and widened to f64 on load.
//!
//! A parameter file concatenates named blocks: u32 name length, the UTF-8
//! name, then one block. Exactly the names `W`, `b`, `p`, `k`, `proj_weight`
//! and `proj_bias` must appear, each once. Vectors are stored as N x 1
//! blocks; the reader also accepts 1 x N.
//!
//! Feature files whose name ends in `.csv` are instead parsed as text, one
//! comma-separated frame per line; timing does not fit in a CSV, so the
//! caller supplies the hop and start time.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use diapipe_core::pool::{AttentionParams, FrameFeatureMatrix, VadTrack};
use diapipe_core::Mat;

pub const MAGIC: &[u8; 4] = b"FMV1";

/// One decoded block, before interpretation as features, track, or weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub data: Mat,
    pub frame_hop_s: f64,
    pub start_s: f64,
}

pub fn encode_block(data: &Mat, frame_hop_s: f64, start_s: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 4 * data.rows() * data.cols());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(data.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(data.cols() as u32).to_le_bytes());
    out.extend_from_slice(&frame_hop_s.to_le_bytes());
    out.extend_from_slice(&start_s.to_le_bytes());
    for v in data.data() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize, what: &str) -> Result<&'a [u8]> {
    let end = pos.checked_add(n).filter(|e| *e <= bytes.len());
    match end {
        Some(end) => {
            let s = &bytes[*pos..end];
            *pos = end;
            Ok(s)
        }
        None => bail!("truncated while reading {what} at byte {pos}"),
    }
}

fn read_u32(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u32> {
    Ok(u32::from_le_bytes(take(bytes, pos, 4, what)?.try_into().unwrap()))
}

fn read_f64(bytes: &[u8], pos: &mut usize, what: &str) -> Result<f64> {
    Ok(f64::from_le_bytes(take(bytes, pos, 8, what)?.try_into().unwrap()))
}

pub fn decode_block(bytes: &[u8], pos: &mut usize) -> Result<Block> {
    let magic = take(bytes, pos, 4, "magic")?;
    if magic != MAGIC {
        bail!("bad magic {magic:02x?} at byte {}, expected \"FMV1\"", *pos - 4);
    }
    let rows = read_u32(bytes, pos, "row count")? as usize;
    let cols = read_u32(bytes, pos, "column count")? as usize;
    let frame_hop_s = read_f64(bytes, pos, "frame hop")?;
    let start_s = read_f64(bytes, pos, "start time")?;
    let n = rows
        .checked_mul(cols)
        .with_context(|| format!("block size {rows} x {cols} overflows"))?;
    let raw = take(bytes, pos, 4 * n, "values")?;
    let data: Vec<f64> = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(Block {
        data: Mat::from_vec(rows, cols, data)?,
        frame_hop_s,
        start_s,
    })
}

fn decode_single_block(bytes: &[u8]) -> Result<Block> {
    let mut pos = 0;
    let block = decode_block(bytes, &mut pos)?;
    if pos != bytes.len() {
        bail!("{} trailing bytes after the block", bytes.len() - pos);
    }
    Ok(block)
}

fn parse_csv(text: &str) -> Result<Mat> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .with_context(|| format!("line {}: bad value {:?}", i + 1, f.trim()))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                bail!("line {}: {} values, expected {}", i + 1, row.len(), first.len());
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("no data rows");
    }
    Ok(Mat::from_rows(&rows)?)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Load a feature matrix. CSV inputs take their timing from the arguments;
/// binary inputs carry their own and ignore them.
pub fn read_features(path: &Path, csv_frame_hop_s: f64, csv_start_s: f64) -> Result<FrameFeatureMatrix> {
    let load = || -> Result<FrameFeatureMatrix> {
        if is_csv(path) {
            let m = parse_csv(&fs::read_to_string(path)?)?;
            Ok(FrameFeatureMatrix::new(m, csv_frame_hop_s, csv_start_s)?)
        } else {
            let block = decode_single_block(&fs::read(path)?)?;
            Ok(FrameFeatureMatrix::new(block.data, block.frame_hop_s, block.start_s)?)
        }
    };
    load().with_context(|| format!("reading features from {}", path.display()))
}

pub fn write_features(path: &Path, h: &FrameFeatureMatrix) -> Result<()> {
    crate::write_atomic(path, &encode_block(&h.data, h.frame_hop_s, h.start_s))
        .with_context(|| format!("writing features to {}", path.display()))
}

/// Load a single-column block as a logit track.
pub fn read_track(path: &Path) -> Result<VadTrack> {
    let load = || -> Result<VadTrack> {
        let bytes = fs::read(path)?;
        let block = decode_single_block(&bytes)?;
        if block.data.cols() != 1 {
            bail!("track must have one column, got {}", block.data.cols());
        }
        Ok(VadTrack::new(block.data.data().to_vec(), block.frame_hop_s, block.start_s)?)
    };
    load().with_context(|| format!("reading logit track from {}", path.display()))
}

pub fn write_track(path: &Path, track: &VadTrack) -> Result<()> {
    let m = Mat::from_vec(track.v.len(), 1, track.v.clone()).expect("column vector");
    crate::write_atomic(path, &encode_block(&m, track.frame_hop_s, track.start_s))
        .with_context(|| format!("writing logit track to {}", path.display()))
}

const PARAM_NAMES: [&str; 6] = ["W", "b", "p", "k", "proj_weight", "proj_bias"];

fn as_vector(block: &Block, name: &str) -> Result<Vec<f64>> {
    let m = &block.data;
    if m.cols() == 1 || m.rows() == 1 {
        Ok(m.data().to_vec())
    } else {
        bail!("parameter {name} must be a vector, got {} x {}", m.rows(), m.cols())
    }
}

/// Load attention and projection weights from a keyed parameter file.
pub fn read_params(path: &Path) -> Result<AttentionParams> {
    let load = || -> Result<AttentionParams> {
        let bytes = fs::read(path)?;
        let mut pos = 0;
        let mut blocks: Vec<(String, Block)> = Vec::new();
        while pos < bytes.len() {
            let name_len = read_u32(&bytes, &mut pos, "parameter name length")? as usize;
            let name = std::str::from_utf8(take(&bytes, &mut pos, name_len, "parameter name")?)
                .context("parameter name is not UTF-8")?
                .to_string();
            if !PARAM_NAMES.contains(&name.as_str()) {
                bail!("unknown parameter {name:?}, expected one of {PARAM_NAMES:?}");
            }
            if blocks.iter().any(|(n, _)| *n == name) {
                bail!("duplicate parameter {name:?}");
            }
            let block = decode_block(&bytes, &mut pos)
                .with_context(|| format!("decoding parameter {name:?}"))?;
            blocks.push((name, block));
        }
        let get = |name: &str| -> Result<&Block> {
            blocks
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, b)| b)
                .with_context(|| format!("parameter {name:?} is missing"))
        };
        Ok(AttentionParams::new(
            get("W")?.data.clone(),
            as_vector(get("b")?, "b")?,
            get("p")?.data.clone(),
            as_vector(get("k")?, "k")?,
            get("proj_weight")?.data.clone(),
            as_vector(get("proj_bias")?, "proj_bias")?,
        )?)
    };
    load().with_context(|| format!("reading parameters from {}", path.display()))
}

/// Serialize raw weight matrices as a parameter file. Matrix shapes are
/// validated by the reader, not here, so fixtures can write bad files too.
pub fn write_params(
    path: &Path,
    w: &Mat,
    b: &[f64],
    p: &Mat,
    k: &[f64],
    proj_weight: &Mat,
    proj_bias: &[f64],
) -> Result<()> {
    let column = |v: &[f64]| Mat::from_vec(v.len(), 1, v.to_vec()).expect("column vector");
    let mut out = Vec::new();
    for (name, m) in [
        ("W", w.clone()),
        ("b", column(b)),
        ("p", p.clone()),
        ("k", column(k)),
        ("proj_weight", proj_weight.clone()),
        ("proj_bias", column(proj_bias)),
    ] {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&encode_block(&m, 0.0, 0.0));
    }
    crate::write_atomic(path, &out).with_context(|| format!("writing parameters to {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = tempfile::tempdir().unwrap();
        // Leak the dir so the path stays valid for the test body.
        let path = dir.path().join(name);
        std::mem::forget(dir);
        path
    }

    #[test]
    fn features_round_trip() {
        let m = Mat::from_vec(3, 2, vec![1.0, 2.0, 3.0, -4.5, 0.25, 6.0]).unwrap();
        let h = FrameFeatureMatrix::new(m, 0.02, 1.5).unwrap();
        let path = tmp("f.fmv1");
        write_features(&path, &h).unwrap();
        let back = read_features(&path, 0.01, 0.0).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn f32_storage_rounds_values() {
        let m = Mat::from_vec(1, 1, vec![0.1]).unwrap();
        let h = FrameFeatureMatrix::new(m, 0.01, 0.0).unwrap();
        let path = tmp("f.fmv1");
        write_features(&path, &h).unwrap();
        let back = read_features(&path, 0.01, 0.0).unwrap();
        assert_eq!(back.data[(0, 0)], 0.1f32 as f64);
    }

    #[test]
    fn csv_features_take_timing_from_caller() {
        let path = tmp("f.csv");
        std::fs::write(&path, "1.0, 2.0\n3.0, 4.0\n").unwrap();
        let h = read_features(&path, 0.02, 0.5).unwrap();
        assert_eq!(h.num_frames(), 2);
        assert_eq!(h.frame_hop_s, 0.02);
        assert_eq!(h.start_s, 0.5);
        assert_eq!(h.data[(1, 0)], 3.0);
    }

    #[test]
    fn ragged_csv_is_rejected_with_line_number() {
        let path = tmp("f.csv");
        std::fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        let err = format!("{:#}", read_features(&path, 0.01, 0.0).unwrap_err());
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn bad_magic_error_names_the_file() {
        let path = tmp("bad.fmv1");
        std::fs::write(&path, b"NOPE\x01\x00\x00\x00").unwrap();
        let err = format!("{:#}", read_features(&path, 0.01, 0.0).unwrap_err());
        assert!(err.contains("bad.fmv1"), "{err}");
        assert!(err.contains("magic"), "{err}");
    }

    #[test]
    fn truncated_block_is_rejected() {
        let m = Mat::from_vec(2, 2, vec![1.0; 4]).unwrap();
        let mut bytes = encode_block(&m, 0.01, 0.0);
        bytes.truncate(bytes.len() - 3);
        let path = tmp("t.fmv1");
        std::fs::write(&path, &bytes).unwrap();
        let err = format!("{:#}", read_features(&path, 0.01, 0.0).unwrap_err());
        assert!(err.contains("truncated"), "{err}");
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let m = Mat::from_vec(1, 1, vec![1.0]).unwrap();
        let mut bytes = encode_block(&m, 0.01, 0.0);
        bytes.push(0);
        let path = tmp("t.fmv1");
        std::fs::write(&path, &bytes).unwrap();
        let err = format!("{:#}", read_features(&path, 0.01, 0.0).unwrap_err());
        assert!(err.contains("trailing"), "{err}");
    }

    #[test]
    fn params_round_trip_through_reader_validation() {
        let w = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let p = Mat::from_vec(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let proj = Mat::from_vec(4, 6, (0..24).map(f64::from).collect()).unwrap();
        let path = tmp("p.bin");
        write_params(&path, &w, &[0.5, -0.5], &p, &[1.0, 2.0, 3.0], &proj, &[0.0; 4]).unwrap();
        let params = read_params(&path).unwrap();
        assert_eq!(params.num_channels(), 3);
        assert_eq!(params.embed_dim(), 4);
    }

    #[test]
    fn unknown_parameter_name_is_rejected() {
        let path = tmp("p.bin");
        let m = Mat::from_vec(1, 1, vec![1.0]).unwrap();
        let mut out = Vec::new();
        out.extend_from_slice(&5u32.to_le_bytes());
        out.extend_from_slice(b"gamma");
        out.extend_from_slice(&encode_block(&m, 0.0, 0.0));
        std::fs::write(&path, &out).unwrap();
        let err = format!("{:#}", read_params(&path).unwrap_err());
        assert!(err.contains("gamma"), "{err}");
    }

    #[test]
    fn missing_parameter_is_rejected() {
        let path = tmp("p.bin");
        let m = Mat::from_vec(1, 1, vec![1.0]).unwrap();
        let mut out = Vec::new();
        out.extend_from_slice(&1u32.to_le_bytes());
        out.extend_from_slice(b"W");
        out.extend_from_slice(&encode_block(&m, 0.0, 0.0));
        std::fs::write(&path, &out).unwrap();
        let err = format!("{:#}", read_params(&path).unwrap_err());
        assert!(err.contains("missing"), "{err}");
    }

    #[test]
    fn track_round_trip() {
        let t = VadTrack::new(vec![0.5, -0.25, 1.0], 0.01, 2.0).unwrap();
        let path = tmp("t.fmv1");
        write_track(&path, &t).unwrap();
        assert_eq!(read_track(&path).unwrap(), t);
    }
}
