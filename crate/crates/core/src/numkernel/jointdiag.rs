use super::linalg::Matrix;
use crate::error::{Error, Result};

const ROTATION_THRESHOLD: f64 = 1e-12;
const MAX_SWEEPS: usize = 200;
const NEGLIGIBLE_OFF: f64 = 1e-26;

#[derive(Debug, Clone)]
pub struct JointDiagonalization {
    /// Orthogonal; `vᵀ M_i v` is approximately diagonal for every input.
    pub v: Matrix,
    pub sweeps: usize,
    /// Off-diagonal energy before the first sweep and after each sweep.
    pub off_history: Vec<f64>,
    /// `false` when the sweep cap was reached.
    pub converged: bool,
}

/// Sum of squared off-diagonal entries over a set of square matrices.
pub fn off_diagonal_energy(mats: &[Matrix]) -> f64 {
    mats.iter()
        .map(|m| {
            let mut e = 0.0;
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    if i != j {
                        e += m[(i, j)] * m[(i, j)];
                    }
                }
            }
            e
        })
        .sum()
}

/// Jacobi-rotation joint approximate diagonalisation of real symmetric
/// matrices (closed-form Givens angle per index pair).
pub fn joint_diagonalize(mats: &[Matrix]) -> Result<JointDiagonalization> {
    let Some(first) = mats.first() else {
        return Err(Error::invalid("joint_diagonalize needs at least one matrix"));
    };
    let n = first.nrows();
    if mats.iter().any(|m| m.nrows() != n || m.ncols() != n) {
        return Err(Error::invalid("joint_diagonalize: matrices must share one square shape"));
    }
    let mut work: Vec<Matrix> = mats.to_vec();
    let mut v = Matrix::identity(n, n);
    let mut off_history = vec![off_diagonal_energy(&work)];
    let mut converged = false;
    let mut sweeps = 0;
    // Pairs whose off-diagonal entries are at rounding level are left alone;
    // rotating them would only mix nearly degenerate directions at random.
    let negligible = NEGLIGIBLE_OFF * mats.iter().map(|m| m.norm_squared()).sum::<f64>();

    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (mut g00, mut g01, mut g11) = (0.0, 0.0, 0.0);
                for m in &work {
                    let a = m[(p, p)] - m[(q, q)];
                    let b = m[(p, q)] + m[(q, p)];
                    g00 += a * a;
                    g01 += a * b;
                    g11 += b * b;
                }
                if g11 <= negligible {
                    continue;
                }
                let ton = g00 - g11;
                let toff = 2.0 * g01;
                let theta = 0.5 * toff.atan2(ton + (ton * ton + toff * toff).sqrt());
                let (s, c) = theta.sin_cos();
                if s.abs() <= ROTATION_THRESHOLD {
                    continue;
                }
                rotated = true;
                for m in work.iter_mut() {
                    rotate_cols(m, p, q, c, s);
                    rotate_rows(m, p, q, c, s);
                }
                rotate_cols(&mut v, p, q, c, s);
            }
        }
        off_history.push(off_diagonal_energy(&work));
        if !rotated {
            converged = true;
            break;
        }
    }
    Ok(JointDiagonalization {
        v,
        sweeps,
        off_history,
        converged,
    })
}

fn rotate_cols(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let (mp, mq) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = c * mp + s * mq;
        m[(i, q)] = -s * mp + c * mq;
    }
}

fn rotate_rows(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for j in 0..m.ncols() {
        let (mp, mq) = (m[(p, j)], m[(q, j)]);
        m[(p, j)] = c * mp + s * mq;
        m[(q, j)] = -s * mp + c * mq;
    }
}
