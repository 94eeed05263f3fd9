//! Writes a small synthetic recording for trying out the CLI.
//!
//! Two "speakers" live on disjoint feature directions with silence in
//! between, and the parameters are identity-shaped so speech frames score
//! logit +0.5 and silence -0.5. Usage:
//!
//! ```text
//! cargo run --example make_fixture -- <output-dir>
//! cargo run -- diarize --features <dir>/features.fmv1 --params <dir>/params.bin \
//!     --set hysteresis.theta_on=0.25 --recording-id rec
//! ```

use std::path::Path;

use anyhow::{Context, Result};
use diapipe::fmv1;
use diapipe_core::pool::FrameFeatureMatrix;
use diapipe_core::rttm::{records_from_segments, write_rttm};
use diapipe_core::segment::LabeledSegment;
use diapipe_core::Mat;

fn main() -> Result<()> {
    let dir = std::env::args().nth(1).context("usage: make_fixture <output-dir>")?;
    let dir = Path::new(&dir);
    std::fs::create_dir_all(dir)?;

    let c = 4;
    let mut proj = Mat::zeros(c, 2 * c);
    for i in 0..c {
        proj[(i, i)] = 1.0;
    }
    fmv1::write_params(
        &dir.join("params.bin"),
        &Mat::identity(c),
        &vec![0.0; c],
        &Mat::identity(c),
        &vec![-0.5; c],
        &proj,
        &vec![0.0; c],
    )?;

    let mut m = Mat::zeros(2000, 4);
    let mut paint = |from: usize, to: usize, dims: [usize; 2]| {
        for t in from..to {
            m[(t, dims[0])] = 2.0;
            m[(t, dims[1])] = 2.0;
        }
    };
    paint(100, 300, [0, 1]);
    paint(1100, 1300, [0, 1]);
    paint(600, 800, [2, 3]);
    paint(1600, 1800, [2, 3]);
    fmv1::write_features(&dir.join("features.fmv1"), &FrameFeatureMatrix::with_default_timing(m)?)?;

    let truth = vec![
        LabeledSegment::new(1.0, 3.0, "A"),
        LabeledSegment::new(6.0, 8.0, "B"),
        LabeledSegment::new(11.0, 13.0, "A"),
        LabeledSegment::new(16.0, 18.0, "B"),
    ];
    diapipe::write_atomic(
        &dir.join("truth.rttm"),
        write_rttm(&records_from_segments("rec", &truth)).as_bytes(),
    )?;
    let oracle: String = truth.iter().map(|s| format!("{:.3} {:.3}\n", s.onset_s, s.offset_s)).collect();
    diapipe::write_atomic(&dir.join("oracle.txt"), oracle.as_bytes())?;

    println!("fixture written to {}", dir.display());
    Ok(())
}
