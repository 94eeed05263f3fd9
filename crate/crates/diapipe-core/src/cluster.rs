//! Spectral clustering of speaker embeddings: cosine affinity, top-K
//! row pruning, symmetric normalized Laplacian, eigengap speaker-count
//! estimation, and k-means labeling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::eig::symmetric_eigen;
use crate::error::{Error, Result};
use crate::kmeans::kmeans;
use crate::mat::Mat;
use crate::pool::SpeakerEmbedding;

/// Pairwise similarity matrix over the embedding windows.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    pub a: Mat,
    /// True once top-K pruning has been applied.
    pub pruned: bool,
}

/// Knobs for the clustering stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterConfig {
    /// Off-diagonal similarities kept per row, capped at N-1.
    pub top_k: usize,
    /// Upper bound for the eigengap search.
    pub max_speakers: usize,
    pub kmeans_restarts: usize,
    pub kmeans_iters: usize,
    /// Normalize eigenvector rows to unit length before k-means.
    pub row_normalize: bool,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            top_k: 10,
            max_speakers: 20,
            kmeans_restarts: 10,
            kmeans_iters: 300,
            row_normalize: false,
            seed: 42,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0
            || self.max_speakers == 0
            || self.kmeans_restarts == 0
            || self.kmeans_iters == 0
        {
            return Err(Error::InvalidConfig(
                "top_k, max_speakers, kmeans_restarts and kmeans_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    /// Cluster index per input embedding, each in `[0, n_speakers)`.
    pub labels: Vec<usize>,
    pub n_speakers: usize,
    /// Laplacian eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
}

/// Cosine similarities clamped at zero, with a unit diagonal.
///
/// Negative similarities would break the non-negativity the Laplacian
/// construction assumes, so they are floored to 0.
pub fn cosine_affinity(embeddings: &[SpeakerEmbedding]) -> Result<AffinityMatrix> {
    let n = embeddings.len();
    if n == 0 {
        return Err(Error::EmptyInput("no embeddings to cluster".into()));
    }
    let mut norms = Vec::with_capacity(n);
    for (i, e) in embeddings.iter().enumerate() {
        if e.d.len() != embeddings[0].d.len() {
            return Err(Error::DimensionMismatch(format!(
                "embedding {} has dimension {}, expected {}",
                i,
                e.d.len(),
                embeddings[0].d.len()
            )));
        }
        let norm = libm::sqrt(e.d.iter().map(|x| x * x).sum());
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroNormEmbedding(i));
        }
        norms.push(norm);
    }
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let dot: f64 = embeddings[i]
                .d
                .iter()
                .zip(&embeddings[j].d)
                .map(|(x, y)| x * y)
                .sum();
            let sim = (dot / (norms[i] * norms[j])).max(0.0);
            a[(i, j)] = sim;
            a[(j, i)] = sim;
        }
    }
    Ok(AffinityMatrix { a, pruned: false })
}

/// Keep the `top_k` largest off-diagonal entries of each row (the
/// diagonal always stays), then restore symmetry with an element-wise
/// max of the row-pruned matrix and its transpose.
pub fn prune_topk(aff: &AffinityMatrix, top_k: usize) -> AffinityMatrix {
    let n = aff.a.rows();
    let keep = top_k.min(n.saturating_sub(1));
    let mut rowwise = Mat::zeros(n, n);
    let mut order: Vec<usize> = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n {
        rowwise[(i, i)] = aff.a[(i, i)];
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&x, &y| aff.a[(i, y)].total_cmp(&aff.a[(i, x)]).then(x.cmp(&y)));
        for &j in order.iter().take(keep) {
            rowwise[(i, j)] = aff.a[(i, j)];
        }
    }
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = rowwise[(i, j)].max(rowwise[(j, i)]);
        }
    }
    AffinityMatrix { a, pruned: true }
}

/// Symmetric normalized Laplacian `I - D^{-1/2} A D^{-1/2}` with
/// `D = diag(row sums)`. A zero-degree node yields an identity row.
pub fn normalized_laplacian(aff: &AffinityMatrix) -> Mat {
    let n = aff.a.rows();
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = (0..n).map(|j| aff.a[(i, j)]).sum();
            if d > 0.0 {
                1.0 / libm::sqrt(d)
            } else {
                0.0
            }
        })
        .collect();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let norm = aff.a[(i, j)] * inv_sqrt_deg[i] * inv_sqrt_deg[j];
            l[(i, j)] = if i == j { 1.0 - norm } else { -norm };
        }
    }
    l
}

/// Speaker count from the largest gap in the ascending eigenvalue
/// sequence: `n = argmax (lambda_{i+1} - lambda_i)` over
/// `1 <= i <= min(max_speakers, len - 1)`, ties toward smaller n.
pub fn estimate_speakers_eigengap(eigenvalues: &[f64], max_speakers: usize) -> Result<usize> {
    if eigenvalues.len() < 2 {
        return Err(Error::EmptyInput(
            "eigengap estimation needs at least two eigenvalues".into(),
        ));
    }
    let bound = max_speakers.max(1).min(eigenvalues.len() - 1);
    let mut best_n = 1;
    let mut best_gap = f64::NEG_INFINITY;
    for i in 1..=bound {
        let gap = eigenvalues[i] - eigenvalues[i - 1];
        if gap > best_gap {
            best_gap = gap;
            best_n = i;
        }
    }
    Ok(best_n)
}

/// K-means over the rows of the `n` eigenvectors with the smallest
/// eigenvalues of `l`.
pub fn spectral_kmeans(l: &Mat, n: usize, cfg: &ClusterConfig) -> Result<ClusterResult> {
    cfg.validate()?;
    let size = l.rows();
    if n == 0 || n > size {
        return Err(Error::InvalidConfig(format!(
            "cluster count {n} out of range for {size} windows"
        )));
    }
    let (eigenvalues, vectors) = symmetric_eigen(l)?;
    let mut points = Mat::zeros(size, n);
    for i in 0..size {
        for j in 0..n {
            points[(i, j)] = vectors[(i, j)];
        }
    }
    if cfg.row_normalize {
        for i in 0..size {
            let norm = libm::sqrt((0..n).map(|j| points[(i, j)] * points[(i, j)]).sum());
            if norm > 0.0 {
                for j in 0..n {
                    points[(i, j)] /= norm;
                }
            }
        }
    }
    let (labels, _) = kmeans(&points, n, cfg.kmeans_restarts, cfg.kmeans_iters, cfg.seed)?;
    Ok(ClusterResult { labels, n_speakers: n, eigenvalues })
}

/// Full clustering route: affinity, pruning, Laplacian, speaker count
/// (`oracle_n` if provided, otherwise the eigengap estimate), k-means.
pub fn cluster(
    embeddings: &[SpeakerEmbedding],
    oracle_n: Option<usize>,
    cfg: &ClusterConfig,
) -> Result<ClusterResult> {
    cfg.validate()?;
    let n = embeddings.len();
    if n == 0 {
        return Err(Error::EmptyInput("no embeddings to cluster".into()));
    }
    if let Some(k) = oracle_n {
        if k == 0 || k > n {
            return Err(Error::InvalidConfig(format!(
                "oracle speaker count {k} out of range for {n} windows"
            )));
        }
    }
    if n == 1 {
        cosine_affinity(embeddings)?;
        return Ok(ClusterResult {
            labels: vec![0],
            n_speakers: 1,
            eigenvalues: vec![0.0],
        });
    }
    let aff = cosine_affinity(embeddings)?;
    let pruned = prune_topk(&aff, cfg.top_k);
    let l = normalized_laplacian(&pruned);
    let k = match oracle_n {
        Some(k) => k,
        None => {
            let (eigenvalues, _) = symmetric_eigen(&l)?;
            estimate_speakers_eigengap(&eigenvalues, cfg.max_speakers)?
        }
    };
    spectral_kmeans(&l, k, cfg)
}
