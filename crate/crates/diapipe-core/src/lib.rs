//! Single-step speaker diarization on frame-level features.
//!
//! One pass of attentive statistics pooling over a sliding window yields
//! both a speaker embedding per window and per-frame voice-activity
//! logits (the channel-averaged attention logits). Hysteresis
//! thresholding of the aggregated logits gives speech segments, the
//! window embeddings are grouped by spectral clustering with an eigengap
//! speaker-count estimate, and the cluster labels are mapped back onto
//! the detected speech. A scorer for diarization error rate and VAD
//! error plus logit-response analysis utilities round out the crate.
//!
//! The crate is `no_std` (with `alloc`); file formats and the CLI live
//! in the companion `diapipe` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod assignment;
pub mod cluster;
pub mod eig;
mod error;
mod kmeans;
mod mat;
pub mod pipeline;
pub mod pool;
pub mod rttm;
pub mod score;
pub mod segment;
pub mod timeline;

pub use error::{Error, Result};
pub use mat::Mat;
