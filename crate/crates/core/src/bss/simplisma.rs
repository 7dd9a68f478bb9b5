use serde_json::Value;

use super::{check_k, Factorization};
use crate::error::{Error, Result};
use crate::numkernel::{solve_spd_or_ridge, Matrix};

/// Relative size below which a purity denominator, or a determinant ratio,
/// counts as zero.
const DEGENERATE: f64 = 1e-12;

/// SIMPLISMA pure-variable selection.
///
/// Variables are spectral points, observations are the mixture spectra. The
/// purity of point `j` is `σ_j / (|μ_j| + α)` with
/// `α = offset_percent/100 · max μ`; later selections are weighted by the
/// determinant of the correlation-around-origin matrix of the points chosen
/// so far plus the candidate. Component spectra are resolved by least
/// squares from the data columns at the pure points.
pub fn simplisma(x: &Matrix, k: usize, offset_percent: f64) -> Result<Factorization> {
    check_k(x, k)?;
    if !(offset_percent.is_finite() && offset_percent >= 0.0) {
        return Err(Error::invalid("offset percent must be nonnegative"));
    }
    let (m, n) = (x.nrows(), x.ncols());
    let mf = m as f64;
    let mu: Vec<f64> = x.column_iter().map(|c| c.sum() / mf).collect();
    let sigma: Vec<f64> = x
        .column_iter()
        .zip(&mu)
        .map(|(c, &u)| (c.iter().map(|v| (v - u).powi(2)).sum::<f64>() / mf).sqrt())
        .collect();
    let max_mu = mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let alpha = offset_percent / 100.0 * max_mu;
    let scale = mu.iter().map(|v| v.abs()).fold(0.0, f64::max).max(sigma.iter().cloned().fold(0.0, f64::max));
    if scale == 0.0 {
        return Err(Error::TechniqueFailure("simplisma: data are all zero".into()));
    }

    let base_purity: Vec<f64> = (0..n)
        .map(|j| {
            let denom = mu[j].abs() + alpha;
            if denom <= DEGENERATE * scale {
                0.0
            } else {
                sigma[j] / denom
            }
        })
        .collect();
    // Length-scaled data: x_ij / sqrt(μ_j² + (σ_j + α)²).
    let scaled = Matrix::from_fn(m, n, |r, j| {
        let len = (mu[j].powi(2) + (sigma[j] + alpha).powi(2)).sqrt();
        if len > 0.0 {
            x[(r, j)] / len
        } else {
            0.0
        }
    });
    // Diagonal of the correlation-around-origin matrix.
    let self_corr: Vec<f64> = scaled.column_iter().map(|c| c.norm_squared() / mf).collect();

    let mut selected: Vec<usize> = Vec::with_capacity(k);
    let mut skipped = 0usize;
    // Orthonormal basis of the selected scaled columns; the determinant ratio
    // for candidate j is its squared residual after projection.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut det = 1.0;
    while selected.len() < k {
        let weights: Vec<f64> = (0..n)
            .map(|j| {
                let col: Vec<f64> = scaled.column(j).iter().map(|v| v / mf.sqrt()).collect();
                let mut resid = self_corr[j];
                for b in &basis {
                    let d: f64 = b.iter().zip(&col).map(|(u, v)| u * v).sum();
                    resid -= d * d;
                }
                if resid <= DEGENERATE * self_corr[j] {
                    0.0
                } else {
                    det * resid
                }
            })
            .collect();
        let purity: Vec<f64> = (0..n)
            .map(|j| if selected.contains(&j) { 0.0 } else { weights[j] * base_purity[j] })
            .collect();
        let (best, &value) = purity
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("n > 0");
        if !(value > 0.0) {
            return Err(Error::TechniqueFailure(format!(
                "simplisma found only {} of {k} pure variables",
                selected.len()
            )));
        }
        let col: Vec<f64> = scaled.column(best).iter().map(|v| v / mf.sqrt()).collect();
        let mut resid = col.clone();
        for b in &basis {
            let d: f64 = b.iter().zip(&col).map(|(u, v)| u * v).sum();
            for (r, u) in resid.iter_mut().zip(b) {
                *r -= d * u;
            }
        }
        let norm = resid.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= DEGENERATE.sqrt() * self_corr[best].sqrt() {
            skipped += 1;
            continue;
        }
        det *= norm * norm;
        basis.push(resid.into_iter().map(|v| v / norm).collect());
        selected.push(best);
    }

    let c = Matrix::from_fn(m, k, |r, i| x[(r, selected[i])]);
    let (components, ridge) = solve_spd_or_ridge(&(c.transpose() * &c), &(c.transpose() * x))?;
    let mut f = Factorization::new(components, c);
    f.metadata.insert("pure_variables".into(), Value::from(selected));
    f.metadata.insert("offset_percent".into(), Value::from(offset_percent));
    if skipped > 0 {
        f.metadata.insert("skipped_candidates".into(), Value::from(skipped));
    }
    if ridge {
        f.metadata.insert("ridge_fallback".into(), Value::from(true));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{inversion_profile, inversion_taus};

    fn gaussian(n: usize, center: f64, width: f64) -> Vec<f64> {
        (0..n).map(|c| (-((c as f64 - center) / width).powi(2) / 2.0).exp()).collect()
    }

    fn two_peaks() -> (Matrix, Matrix) {
        let n = 300;
        let mut a = gaussian(n, 80.0, 6.0);
        let mut b = gaussian(n, 220.0, 9.0);
        // Compact support: no overlap at all.
        a.iter_mut().enumerate().for_each(|(c, v)| if c > 150 { *v = 0.0 });
        b.iter_mut().enumerate().for_each(|(c, v)| if c <= 150 { *v = 0.0 });
        let pures = Matrix::from_fn(2, n, |i, c| if i == 0 { a[c] } else { b[c] });
        let taus = inversion_taus(1.8);
        let w0 = inversion_profile(1.0, 0.6, &taus).unwrap();
        let w1 = inversion_profile(0.7, 1.8, &taus).unwrap();
        let w = Matrix::from_fn(20, 2, |j, i| if i == 0 { w0[j] } else { w1[j] });
        (&w * &pures, pures)
    }

    fn normalized_lack_of_fit(pred: &[f64], pure: &[f64]) -> f64 {
        let n = pred.len() as f64;
        let (mp, mq) = (pred.iter().sum::<f64>() / n, pure.iter().sum::<f64>() / n);
        let sxy: f64 = pred.iter().zip(pure).map(|(p, q)| (p - mp) * (q - mq)).sum();
        let sxx: f64 = pure.iter().map(|q| (q - mq).powi(2)).sum();
        let syy: f64 = pred.iter().map(|p| (p - mp).powi(2)).sum();
        1.0 - sxy * sxy / (sxx * syy)
    }

    #[test]
    fn disjoint_peaks_recovered_exactly() {
        let (x, pures) = two_peaks();
        let f = simplisma(&x, 2, 2.0).unwrap();
        for q in 0..2 {
            let pure: Vec<f64> = pures.row(q).iter().copied().collect();
            let best = (0..2)
                .map(|i| normalized_lack_of_fit(&f.components.row(i).iter().copied().collect::<Vec<_>>(), &pure))
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-6, "pure {q}: {best}");
        }
    }

    #[test]
    fn offset_suppresses_low_mean_points() {
        // Point 0 has a tiny mean but relatively large spread; the other
        // points carry the real signal.
        let m = 20;
        let x = Matrix::from_fn(m, 40, |r, c| {
            let t = r as f64 / (m - 1) as f64;
            match c {
                0 => 1e-3 * (if r % 2 == 0 { 1.0 } else { -0.9 }),
                c if c < 20 => (1.0 + t) * (c as f64 / 20.0),
                c => (2.0 - t) * ((40 - c) as f64 / 20.0),
            }
        });
        let a = simplisma(&x, 1, 0.0).unwrap();
        let b = simplisma(&x, 1, 15.0).unwrap();
        assert_eq!(a.metadata["pure_variables"], serde_json::json!([0]));
        assert_ne!(a.metadata["pure_variables"], b.metadata["pure_variables"]);
    }

    #[test]
    fn deterministic() {
        let (x, _) = two_peaks();
        let a = simplisma(&x, 2, 8.0).unwrap();
        let b = simplisma(&x, 2, 8.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exhausted_selection_fails() {
        let x = Matrix::from_fn(20, 10, |r, c| (r + 1) as f64 * (c + 1) as f64);
        assert!(matches!(simplisma(&x, 3, 2.0), Err(Error::TechniqueFailure(_))));
    }
}
