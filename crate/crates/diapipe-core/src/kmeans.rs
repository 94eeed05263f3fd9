//! Lloyd's k-means with k-means++ seeding and restarts.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mat::Mat;

/// Cluster the rows of `points` into `k` groups.
///
/// Runs `restarts` independent k-means++ initializations from one seeded
/// stream and returns the labeling with the lowest inertia; on equal
/// inertia the earlier restart wins, so a parallel reduction over
/// restarts would pick the same answer. Every cluster in the returned
/// labeling is non-empty.
pub fn kmeans(
    points: &Mat,
    k: usize,
    restarts: usize,
    max_iters: usize,
    seed: u64,
) -> Result<(Vec<usize>, f64)> {
    let n = points.rows();
    if k == 0 || restarts == 0 || max_iters == 0 {
        return Err(Error::InvalidConfig(
            "k, restarts and iterations must all be at least 1".into(),
        ));
    }
    if k > n {
        return Err(Error::InvalidConfig(format!(
            "cannot form {k} clusters from {n} points"
        )));
    }
    if !points.is_finite() {
        return Err(Error::NonFinite("k-means input".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..restarts {
        let (labels, inertia) = run_once(points, k, max_iters, &mut rng);
        if best.as_ref().is_none_or(|(bi, _)| inertia < *bi) {
            best = Some((inertia, labels));
        }
    }
    let (inertia, labels) = best.expect("restarts >= 1");
    Ok((labels, inertia))
}

fn run_once(points: &Mat, k: usize, max_iters: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let n = points.rows();
    let dim = points.cols();
    let mut centers = plus_plus_init(points, k, rng);
    let mut labels = assign(points, &centers);
    for _ in 0..max_iters {
        // Means of the current assignment; an empty cluster takes the
        // point farthest from its own center.
        let mut sums = Mat::zeros(k, dim);
        let mut counts = vec![0usize; n.max(k)];
        for (i, &c) in labels.iter().enumerate() {
            counts[c] += 1;
            for j in 0..dim {
                sums[(c, j)] += points[(i, j)];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..dim {
                    centers[(c, j)] = sums[(c, j)] / counts[c] as f64;
                }
            } else if let Some(far) = farthest_point(points, &centers, &labels) {
                for j in 0..dim {
                    centers[(c, j)] = points[(far, j)];
                }
            }
        }
        let next = assign(points, &centers);
        let stable = next == labels;
        labels = next;
        if stable {
            break;
        }
    }
    rebalance_empty(points, &mut centers, &mut labels, k);
    let inertia = (0..n).map(|i| dist2(points, i, &centers, labels[i])).sum();
    (labels, inertia)
}

fn plus_plus_init(points: &Mat, k: usize, rng: &mut ChaCha8Rng) -> Mat {
    let n = points.rows();
    let dim = points.cols();
    let mut centers = Mat::zeros(k, dim);
    let first = rng.random_range(0..n);
    for j in 0..dim {
        centers[(0, j)] = points[(first, j)];
    }
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(points, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let r = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > r {
                    idx = i;
                    break;
                }
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        for j in 0..dim {
            centers[(c, j)] = points[(pick, j)];
        }
        for i in 0..n {
            d2[i] = d2[i].min(dist2(points, i, &centers, c));
        }
    }
    centers
}

/// Nearest center per point; ties go to the lower center index.
fn assign(points: &Mat, centers: &Mat) -> Vec<usize> {
    (0..points.rows())
        .map(|i| {
            let mut best = 0;
            let mut best_d = dist2(points, i, centers, 0);
            for c in 1..centers.rows() {
                let d = dist2(points, i, centers, c);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

fn dist2(points: &Mat, i: usize, centers: &Mat, c: usize) -> f64 {
    (0..points.cols())
        .map(|j| {
            let d = points[(i, j)] - centers[(c, j)];
            d * d
        })
        .sum()
}

/// Point with the largest distance to its own center; ties go to the
/// lower point index.
fn farthest_point(points: &Mat, centers: &Mat, labels: &[usize]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, &c) in labels.iter().enumerate() {
        let d = dist2(points, i, centers, c);
        if best.is_none_or(|(bd, _)| d > bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}

/// Guarantee every cluster owns at least one point, which ordinary Lloyd
/// iteration cannot promise when points coincide. Each empty cluster
/// steals the point farthest from its center among clusters that can
/// spare one.
fn rebalance_empty(points: &Mat, centers: &mut Mat, labels: &mut [usize], k: usize) {
    let mut counts = vec![0usize; k];
    for &c in labels.iter() {
        counts[c] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut donor: Option<(f64, usize)> = None;
        for (i, &ci) in labels.iter().enumerate() {
            if counts[ci] < 2 {
                continue;
            }
            let d = dist2(points, i, centers, ci);
            if donor.is_none_or(|(bd, _)| d > bd) {
                donor = Some((d, i));
            }
        }
        if let Some((_, i)) = donor {
            counts[labels[i]] -= 1;
            labels[i] = c;
            counts[c] = 1;
            for j in 0..points.cols() {
                centers[(c, j)] = points[(i, j)];
            }
        }
    }
}
