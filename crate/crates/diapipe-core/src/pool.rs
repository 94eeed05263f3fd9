//! Attentive statistics pooling with channel-dependent attention.
//!
//! A window of frame-level features is pooled into a single speaker
//! embedding: a shared bottleneck layer plus per-channel linear heads
//! produce one attention logit per frame and channel, a temporal softmax
//! turns the logits into weights, and the weighted mean/standard
//! deviation of each channel is projected down to the embedding.
//!
//! The same attention logits, averaged over channels, double as
//! frame-level voice-activity logits, so one pass over a window yields
//! both the embedding and a VAD track.
//!
//! All arithmetic is carried out in `f64`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mat::Mat;

/// Default frame hop: one feature frame per 10 ms of audio.
pub const DEFAULT_FRAME_HOP_S: f64 = 0.01;

/// T x C matrix of frame-level features, one row per frame, plus its time base.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatureMatrix {
    /// Feature values, row `t` = feature vector of frame `t`.
    pub data: Mat,
    /// Seconds per frame.
    pub frame_hop_s: f64,
    /// Absolute time of frame 0 in seconds.
    pub start_s: f64,
}

impl FrameFeatureMatrix {
    pub fn new(data: Mat, frame_hop_s: f64, start_s: f64) -> Result<Self> {
        if data.rows() == 0 || data.cols() == 0 {
            return Err(Error::EmptyInput(format!(
                "feature matrix must be at least 1 x 1, got {} x {}",
                data.rows(),
                data.cols()
            )));
        }
        if !data.is_finite() {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        if !(frame_hop_s > 0.0) || !frame_hop_s.is_finite() || !start_s.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "frame_hop_s must be positive and finite (hop {frame_hop_s}, start {start_s})"
            )));
        }
        Ok(Self { data, frame_hop_s, start_s })
    }

    /// Wrap a matrix with the default 10 ms hop starting at t = 0.
    pub fn with_default_timing(data: Mat) -> Result<Self> {
        Self::new(data, DEFAULT_FRAME_HOP_S, 0.0)
    }

    /// Number of frames T.
    pub fn num_frames(&self) -> usize {
        self.data.rows()
    }

    /// Number of channels C.
    pub fn num_channels(&self) -> usize {
        self.data.cols()
    }

    /// End time of the matrix: start plus T frames.
    pub fn end_s(&self) -> f64 {
        self.start_s + self.num_frames() as f64 * self.frame_hop_s
    }

    /// Copy of the frame range `[from, to)` with an adjusted start time.
    pub fn slice_frames(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to > self.num_frames() {
            return Err(Error::DimensionMismatch(format!(
                "frame slice [{from}, {to}) out of range for {} frames",
                self.num_frames()
            )));
        }
        let mut rows = Vec::with_capacity(to - from);
        for t in from..to {
            rows.push(self.data.row(t).to_vec());
        }
        Ok(Self {
            data: Mat::from_rows(&rows)?,
            frame_hop_s: self.frame_hop_s,
            start_s: self.start_s + from as f64 * self.frame_hop_s,
        })
    }
}

/// Weights of the attention head and the embedding projection.
///
/// The bottleneck (`w`, `b`) is shared across channels; each channel `c`
/// has its own linear head (`p` row `c`, offset `k[c]`). The nonlinearity
/// between them is ReLU and is not configurable. `proj_weight`/`proj_bias`
/// map the concatenated pooled mean and standard deviation (length 2C)
/// to the final embedding of dimension D.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    w: Mat,
    b: Vec<f64>,
    p: Mat,
    k: Vec<f64>,
    proj_weight: Mat,
    proj_bias: Vec<f64>,
}

impl AttentionParams {
    pub fn new(
        w: Mat,
        b: Vec<f64>,
        p: Mat,
        k: Vec<f64>,
        proj_weight: Mat,
        proj_bias: Vec<f64>,
    ) -> Result<Self> {
        let r = w.rows();
        let c = w.cols();
        if r == 0 || c == 0 {
            return Err(Error::EmptyInput("attention bottleneck W must be at least 1 x 1".into()));
        }
        if b.len() != r {
            return Err(Error::DimensionMismatch(format!(
                "bias b has length {}, expected bottleneck dimension R = {}",
                b.len(),
                r
            )));
        }
        if p.rows() != c || p.cols() != r {
            return Err(Error::DimensionMismatch(format!(
                "per-channel heads p are {} x {}, expected C x R = {} x {}",
                p.rows(),
                p.cols(),
                c,
                r
            )));
        }
        if k.len() != c {
            return Err(Error::DimensionMismatch(format!(
                "per-channel offsets k have length {}, expected C = {}",
                k.len(),
                c
            )));
        }
        let d = proj_weight.rows();
        if d == 0 {
            return Err(Error::EmptyInput("projection must have at least one output row".into()));
        }
        if proj_weight.cols() != 2 * c {
            return Err(Error::DimensionMismatch(format!(
                "projection is {} x {}, expected D x 2C = {} x {}",
                d,
                proj_weight.cols(),
                d,
                2 * c
            )));
        }
        if proj_bias.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "projection bias has length {}, expected D = {}",
                proj_bias.len(),
                d
            )));
        }
        let finite = w.is_finite()
            && p.is_finite()
            && proj_weight.is_finite()
            && b.iter().chain(&k).chain(&proj_bias).all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFinite("attention parameters".into()));
        }
        Ok(Self { w, b, p, k, proj_weight, proj_bias })
    }

    /// Deterministic random parameters for test fixtures. Values are
    /// uniform in [-1, 1]; not intended for anything but synthetic data.
    pub fn seeded(num_channels: usize, bottleneck: usize, embed_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let w = Mat::from_vec(bottleneck, num_channels, draw(bottleneck * num_channels)).unwrap();
        let b = draw(bottleneck);
        let p = Mat::from_vec(num_channels, bottleneck, draw(num_channels * bottleneck)).unwrap();
        let k = draw(num_channels);
        let proj_weight = Mat::from_vec(embed_dim, 2 * num_channels, draw(embed_dim * 2 * num_channels)).unwrap();
        let proj_bias = draw(embed_dim);
        Self::new(w, b, p, k, proj_weight, proj_bias).expect("seeded dimensions are consistent")
    }

    /// Bottleneck dimension R.
    pub fn bottleneck_dim(&self) -> usize {
        self.w.rows()
    }

    /// Channel count C the parameters were built for.
    pub fn num_channels(&self) -> usize {
        self.w.cols()
    }

    /// Embedding dimension D.
    pub fn embed_dim(&self) -> usize {
        self.proj_weight.rows()
    }
}

/// Raw attention logits, one per frame and channel, with the source time base.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionLogits {
    /// T x C logit matrix.
    pub e: Mat,
    /// Copied from the source features so VAD tracks keep their timing.
    pub frame_hop_s: f64,
    pub start_s: f64,
}

/// Softmax-normalized attention weights. Each channel's column sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    /// T x C weight matrix, entries in (0, 1].
    pub alpha: Mat,
}

/// Attention-weighted per-channel mean and standard deviation of a window.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledStats {
    pub mu: Vec<f64>,
    /// Non-negative; the variance is clamped at zero before the square root.
    pub sigma: Vec<f64>,
    /// Time extent of the pooled window, carried along for the embedding.
    pub window_start_s: f64,
    pub window_end_s: f64,
}

/// Fixed-dimension speaker embedding of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerEmbedding {
    pub d: Vec<f64>,
    pub window_start_s: f64,
    pub window_end_s: f64,
}

impl SpeakerEmbedding {
    /// Window midpoint, used when assigning frames to windows.
    pub fn center_s(&self) -> f64 {
        0.5 * (self.window_start_s + self.window_end_s)
    }
}

/// Per-frame voice-activity logits with their time base.
#[derive(Debug, Clone, PartialEq)]
pub struct VadTrack {
    pub v: Vec<f64>,
    pub frame_hop_s: f64,
    pub start_s: f64,
}

impl VadTrack {
    pub fn new(v: Vec<f64>, frame_hop_s: f64, start_s: f64) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::EmptyInput("VAD track must contain at least one frame".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("VAD logits".into()));
        }
        if !(frame_hop_s > 0.0) || !frame_hop_s.is_finite() || !start_s.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "frame_hop_s must be positive and finite (hop {frame_hop_s}, start {start_s})"
            )));
        }
        Ok(Self { v, frame_hop_s, start_s })
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Start time of frame `i`.
    pub fn frame_time(&self, i: usize) -> f64 {
        self.start_s + i as f64 * self.frame_hop_s
    }

    /// End time of the track.
    pub fn end_s(&self) -> f64 {
        self.frame_time(self.len())
    }
}

/// Attention logits for every frame and channel.
///
/// For frame `t` and channel `c`:
/// `e[t][c] = p_c . relu(W h_t + b) + k[c]`.
pub fn attention_logits(h: &FrameFeatureMatrix, params: &AttentionParams) -> Result<AttentionLogits> {
    let t_len = h.num_frames();
    let c_len = h.num_channels();
    if c_len != params.num_channels() {
        return Err(Error::DimensionMismatch(format!(
            "features have C = {} channels but W is {} x {} (expects C = {})",
            c_len,
            params.bottleneck_dim(),
            params.num_channels(),
            params.num_channels()
        )));
    }
    let r_len = params.bottleneck_dim();
    let mut e = Mat::zeros(t_len, c_len);
    let mut z = vec![0.0; r_len];
    for t in 0..t_len {
        let frame = h.data.row(t);
        for (r, zr) in z.iter_mut().enumerate() {
            let row = params.w.row(r);
            let mut acc = params.b[r];
            for (wv, hv) in row.iter().zip(frame) {
                acc += wv * hv;
            }
            *zr = acc.max(0.0);
        }
        for c in 0..c_len {
            let head = params.p.row(c);
            let mut acc = params.k[c];
            for (pv, zv) in head.iter().zip(&z) {
                acc += pv * zv;
            }
            e[(t, c)] = acc;
        }
    }
    Ok(AttentionLogits {
        e,
        frame_hop_s: h.frame_hop_s,
        start_s: h.start_s,
    })
}

/// Softmax over the temporal dimension, independently per channel.
///
/// Stabilized by subtracting each channel's maximum logit before
/// exponentiation.
pub fn temporal_softmax(e: &AttentionLogits) -> AttentionWeights {
    let t_len = e.e.rows();
    let c_len = e.e.cols();
    let mut alpha = Mat::zeros(t_len, c_len);
    for c in 0..c_len {
        let mut max = f64::NEG_INFINITY;
        for t in 0..t_len {
            max = max.max(e.e[(t, c)]);
        }
        let mut sum = 0.0;
        for t in 0..t_len {
            let w = libm::exp(e.e[(t, c)] - max);
            alpha[(t, c)] = w;
            sum += w;
        }
        for t in 0..t_len {
            alpha[(t, c)] /= sum;
        }
    }
    AttentionWeights { alpha }
}

/// Attention-weighted mean and standard deviation per channel.
///
/// The variance `sum(alpha h^2) - mu^2` is clamped at zero before the
/// square root; rounding can push it a hair below zero.
pub fn attentive_stats(h: &FrameFeatureMatrix, alpha: &AttentionWeights) -> Result<PooledStats> {
    let t_len = h.num_frames();
    let c_len = h.num_channels();
    if alpha.alpha.rows() != t_len || alpha.alpha.cols() != c_len {
        return Err(Error::DimensionMismatch(format!(
            "attention weights are {} x {} but features are {} x {}",
            alpha.alpha.rows(),
            alpha.alpha.cols(),
            t_len,
            c_len
        )));
    }
    let mut mu = vec![0.0; c_len];
    let mut second = vec![0.0; c_len];
    for t in 0..t_len {
        let frame = h.data.row(t);
        let weights = alpha.alpha.row(t);
        for c in 0..c_len {
            mu[c] += weights[c] * frame[c];
            second[c] += weights[c] * frame[c] * frame[c];
        }
    }
    let sigma = mu
        .iter()
        .zip(&second)
        .map(|(m, s)| libm::sqrt((s - m * m).max(0.0)))
        .collect();
    Ok(PooledStats {
        mu,
        sigma,
        window_start_s: h.start_s,
        window_end_s: h.end_s(),
    })
}

/// Channel-averaged attention logits, one VAD logit per frame.
pub fn vad_logits(e: &AttentionLogits) -> VadTrack {
    let c_len = e.e.cols();
    let v = (0..e.e.rows())
        .map(|t| e.e.row(t).iter().sum::<f64>() / c_len as f64)
        .collect();
    VadTrack {
        v,
        frame_hop_s: e.frame_hop_s,
        start_s: e.start_s,
    }
}

/// Project pooled statistics to the final embedding:
/// `d = proj_weight . concat(mu, sigma) + proj_bias`.
pub fn embed(stats: &PooledStats, params: &AttentionParams) -> Result<SpeakerEmbedding> {
    let c_len = stats.mu.len();
    if stats.sigma.len() != c_len {
        return Err(Error::DimensionMismatch(format!(
            "pooled stats have {} means but {} standard deviations",
            c_len,
            stats.sigma.len()
        )));
    }
    if params.proj_weight.cols() != 2 * c_len {
        return Err(Error::DimensionMismatch(format!(
            "projection expects 2C = {} inputs but pooled stats provide {}",
            params.proj_weight.cols(),
            2 * c_len
        )));
    }
    let d_len = params.embed_dim();
    let mut d = Vec::with_capacity(d_len);
    for i in 0..d_len {
        let row = params.proj_weight.row(i);
        let mut acc = params.proj_bias[i];
        for (j, m) in stats.mu.iter().enumerate() {
            acc += row[j] * m;
        }
        for (j, s) in stats.sigma.iter().enumerate() {
            acc += row[c_len + j] * s;
        }
        d.push(acc);
    }
    Ok(SpeakerEmbedding {
        d,
        window_start_s: stats.window_start_s,
        window_end_s: stats.window_end_s,
    })
}

/// Pool one window: speaker embedding and VAD track from a single pass
/// over the attention logits.
pub fn pool_window(
    h: &FrameFeatureMatrix,
    params: &AttentionParams,
) -> Result<(SpeakerEmbedding, VadTrack)> {
    let logits = attention_logits(h, params)?;
    let weights = temporal_softmax(&logits);
    let stats = attentive_stats(h, &weights)?;
    let embedding = embed(&stats, params)?;
    let track = vad_logits(&logits);
    Ok((embedding, track))
}
