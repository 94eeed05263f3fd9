//! Optimal one-to-one assignment (Hungarian algorithm, potentials
//! formulation, O(n^3)).

use alloc::vec;
use alloc::vec::Vec;

use crate::mat::Mat;

/// Pair each row with at most one column so the total weight is
/// maximal. Entry `i` of the result is the column matched to row `i`,
/// or `None` when the matrix is wider than it is tall and row `i` ends
/// up on a padding column.
///
/// Weights are arbitrary finite reals; a `None` pairing contributes 0,
/// so rows whose best real column has weight 0 may report either that
/// column or `None` with equal total.
pub fn max_weight_assignment(w: &Mat) -> Vec<Option<usize>> {
    let rows = w.rows();
    let cols = w.cols();
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    // Minimize negated weights on a square matrix padded with zeros.
    let n = rows.max(cols);
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            -w[(i, j)]
        } else {
            0.0
        }
    };
    // 1-indexed potentials; p[j] is the row matched to column j.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; rows];
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i <= rows && j <= cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

/// Total weight collected by an assignment.
pub fn assignment_weight(w: &Mat, assignment: &[Option<usize>]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| w[(i, j)]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute_force_best(w: &Mat) -> f64 {
        // Try every injective row -> column map.
        fn go(w: &Mat, row: usize, used: &mut Vec<bool>) -> f64 {
            if row == w.rows() {
                return 0.0;
            }
            // Leaving the row unmatched is allowed when cols < rows.
            let mut best = if w.cols() < w.rows() {
                go(w, row + 1, used)
            } else {
                f64::NEG_INFINITY
            };
            for j in 0..w.cols() {
                if !used[j] {
                    used[j] = true;
                    let x = w[(row, j)] + go(w, row + 1, used);
                    used[j] = false;
                    best = best.max(x);
                }
            }
            best
        }
        go(w, 0, &mut vec![false; w.cols()])
    }

    #[test]
    fn diagonal_dominant_picks_diagonal() {
        let w = Mat::from_rows(&[&[5.0, 1.0, 0.0], &[1.0, 6.0, 1.0], &[0.0, 1.0, 7.0]]).unwrap();
        assert_eq!(max_weight_assignment(&w), vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn anti_diagonal_case() {
        let w = Mat::from_rows(&[&[0.0, 10.0], &[10.0, 0.0]]).unwrap();
        assert_eq!(max_weight_assignment(&w), vec![Some(1), Some(0)]);
    }

    #[test]
    fn greedy_is_not_optimal_here() {
        // Greedy grabs 9 and is then forced onto 1 (total 10); the
        // optimum pairs the two 8s (total 16).
        let w = Mat::from_rows(&[&[9.0, 8.0], &[8.0, 1.0]]).unwrap();
        let a = max_weight_assignment(&w);
        assert_eq!(assignment_weight(&w, &a), 16.0);
    }

    #[test]
    fn wide_matrix_uses_best_columns() {
        let w = Mat::from_rows(&[&[1.0, 9.0, 2.0, 3.0]]).unwrap();
        assert_eq!(max_weight_assignment(&w), vec![Some(1)]);
    }

    #[test]
    fn tall_matrix_leaves_rows_unmatched() {
        let w = Mat::from_rows(&[&[5.0], &[9.0], &[2.0]]).unwrap();
        let a = max_weight_assignment(&w);
        assert_eq!(a[1], Some(0));
        assert_eq!(assignment_weight(&w, &a), 9.0);
    }

    #[test]
    fn matches_exhaustive_search_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        for trial in 0..300 {
            let rows = rng.random_range(1..=5);
            let cols = rng.random_range(1..=5);
            let mut w = Mat::zeros(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    w[(i, j)] = rng.random_range(0.0..10.0);
                }
            }
            let a = max_weight_assignment(&w);
            // One-to-one.
            let mut seen = vec![false; cols];
            for j in a.iter().flatten() {
                assert!(!seen[*j], "column reused in trial {trial}");
                seen[*j] = true;
            }
            let got = assignment_weight(&w, &a);
            let want = brute_force_best(&w);
            assert!((got - want).abs() < 1e-9, "trial {trial}: {got} vs {want}");
        }
    }
}
