use super::linalg::Matrix;
use crate::error::{Error, Result};

/// One-to-one partial matching between rows and columns of a score matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `(row, column)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    /// Sum of the selected scores, accumulated in row order.
    pub total: f64,
}

/// Rectangular maximum-weight assignment. Exactly `min(rows, cols)` pairs are
/// selected, each row and column at most once.
///
/// Shortest augmenting path Hungarian method with dual potentials,
/// `O(n² m)` for `n = min(rows, cols)`.
pub fn assign_max(score: &Matrix) -> Result<Assignment> {
    if score.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("assign_max: scores must be finite"));
    }
    let (rows, cols) = score.shape();
    if rows == 0 || cols == 0 {
        return Ok(Assignment {
            pairs: vec![],
            total: 0.0,
        });
    }
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let cost = |i: usize, j: usize| -> f64 {
        if transpose {
            -score[(j, i)]
        } else {
            -score[(i, j)]
        }
    };

    // 1-based potentials; index 0 is the virtual source column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
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
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| {
            let (i, j) = (owner[j] - 1, j - 1);
            if transpose {
                (j, i)
            } else {
                (i, j)
            }
        })
        .collect();
    pairs.sort_unstable();
    let total = pairs.iter().map(|&(r, c)| score[(r, c)]).sum();
    Ok(Assignment { pairs, total })
}
