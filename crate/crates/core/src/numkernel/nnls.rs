use nalgebra::DVector;

use super::linalg::{pinv, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct NnlsResult {
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// Nonnegative least squares: `min ||a x - b||^2` subject to `x >= 0`.
pub fn nnls(a: &Matrix, b: &[f64]) -> Result<NnlsResult> {
    if a.nrows() != b.len() {
        return Err(Error::invalid(format!(
            "nnls: matrix has {} rows but rhs has {} entries",
            a.nrows(),
            b.len()
        )));
    }
    let at = a.transpose();
    let gram = &at * a;
    let atb = at * DVector::from_column_slice(b);
    nnls_gram(&gram, atb.as_slice())
}

/// Lawson–Hanson active-set NNLS on the normal equations
/// (`gram = AᵀA`, `atb = Aᵀb`).
pub fn nnls_gram(gram: &Matrix, atb: &[f64]) -> Result<NnlsResult> {
    let n = atb.len();
    if gram.nrows() != n || gram.ncols() != n {
        return Err(Error::invalid("nnls_gram: gram/rhs shape mismatch"));
    }
    if n == 0 {
        return Ok(NnlsResult {
            x: vec![],
            iterations: 0,
        });
    }
    let scale = gram.amax().max(atb.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    let tol = 1e-13 * scale.max(f64::MIN_POSITIVE) * n as f64;
    let max_iter = 30 * n + 100;

    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let gradient = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| atb[i] - (0..n).map(|j| gram[(i, j)] * x[j]).sum::<f64>())
            .collect()
    };
    let mut w = gradient(&x);
    let mut iterations = 0;

    loop {
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]));
        let Some(t) = candidate else { break };
        passive[t] = true;

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::NumericalFailure(
                    "nnls exceeded its iteration cap".into(),
                ));
            }
            let s = solve_passive(gram, atb, &passive)?;
            if (0..n).filter(|&j| passive[j]).all(|j| s[j] > 0.0) {
                x = s;
                break;
            }
            let mut alpha = f64::INFINITY;
            for j in (0..n).filter(|&j| passive[j] && s[j] <= 0.0) {
                let denom = x[j] - s[j];
                if denom > 0.0 {
                    alpha = alpha.min(x[j] / denom);
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for j in 0..n {
                x[j] += alpha * (s[j] - x[j]);
                if passive[j] && x[j] <= tol.max(0.0) {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        w = gradient(&x);
    }
    Ok(NnlsResult { x, iterations })
}

fn solve_passive(gram: &Matrix, atb: &[f64], passive: &[bool]) -> Result<Vec<f64>> {
    let idx: Vec<usize> = (0..atb.len()).filter(|&j| passive[j]).collect();
    let mut out = vec![0.0; atb.len()];
    if idx.is_empty() {
        return Ok(out);
    }
    let sub = Matrix::from_fn(idx.len(), idx.len(), |r, c| gram[(idx[r], idx[c])]);
    let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&j| atb[j]));
    let sol = match sub.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => pinv(&sub, 1e-13)? * rhs,
    };
    for (k, &j) in idx.iter().enumerate() {
        out[j] = sol[k];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::SeededRng;
    use super::*;

    fn objective(a: &Matrix, b: &[f64], x: &[f64]) -> f64 {
        (0..a.nrows())
            .map(|i| {
                let r: f64 = (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum::<f64>() - b[i];
                r * r
            })
            .sum()
    }

    #[test]
    fn identity_passthrough() {
        let a = Matrix::identity(3, 3);
        let r = nnls(&a, &[1.0, 0.5, 2.0]).unwrap();
        assert_eq!(r.x, vec![1.0, 0.5, 2.0]);
    }

    #[test]
    fn identity_clips_negative() {
        let r = nnls(&Matrix::identity(2, 2), &[-1.0, 2.0]).unwrap();
        assert_eq!(r.x, vec![0.0, 2.0]);
    }

    #[test]
    fn shape_mismatch() {
        assert!(nnls(&Matrix::identity(2, 2), &[1.0]).is_err());
    }

    #[test]
    fn kkt_conditions_hold() {
        let mut rng = SeededRng::new(11);
        for _ in 0..50 {
            let a = Matrix::from_fn(12, 5, |_, _| rng.gaussian());
            let b: Vec<f64> = (0..12).map(|_| rng.gaussian()).collect();
            let r = nnls(&a, &b).unwrap();
            let grad = a.transpose() * (&a * DVector::from_column_slice(&r.x) - DVector::from_column_slice(&b));
            for j in 0..5 {
                assert!(r.x[j] >= 0.0);
                assert!(grad[j] >= -1e-8, "gradient {} at {j}", grad[j]);
                if r.x[j] > 0.0 {
                    assert!(grad[j].abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn beats_dense_grid_search() {
        let mut rng = SeededRng::new(5);
        for _ in 0..10 {
            let a = Matrix::from_fn(10, 4, |_, _| rng.gaussian());
            let b: Vec<f64> = (0..10).map(|_| rng.gaussian() * 2.0).collect();
            let r = nnls(&a, &b).unwrap();
            let best = objective(&a, &b, &r.x);
            // Box scaled to cover the unconstrained solution's magnitude.
            let unconstrained = pinv(&a, 1e-12).unwrap() * DVector::from_column_slice(&b);
            let hi = unconstrained.amax().max(r.x.iter().cloned().fold(0.0, f64::max)) * 1.5 + 0.1;
            let steps = 30;
            let mut grid_best = f64::INFINITY;
            let mut x = [0.0; 4];
            for i0 in 0..=steps {
                x[0] = hi * i0 as f64 / steps as f64;
                for i1 in 0..=steps {
                    x[1] = hi * i1 as f64 / steps as f64;
                    for i2 in 0..=steps {
                        x[2] = hi * i2 as f64 / steps as f64;
                        for i3 in 0..=steps {
                            x[3] = hi * i3 as f64 / steps as f64;
                            grid_best = grid_best.min(objective(&a, &b, &x));
                        }
                    }
                }
            }
            assert!(best <= grid_best + 1e-6, "nnls {best} grid {grid_best}");
        }
    }
}
