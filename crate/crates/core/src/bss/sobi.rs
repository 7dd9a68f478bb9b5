use serde_json::Value;

use super::{center_columns, check_k, sort_by_contribution, Factorization};
use crate::error::{Error, Result};
use crate::numkernel::{joint_diagonalize, svd, Matrix};

/// Lags along the spectrum index.
pub const DEFAULT_LAGS: [usize; 5] = [1, 2, 3, 4, 5];

/// Second-order blind identification with the spectrum index as the time
/// axis: the per-spectrum intensity profiles are the time series, and the
/// separated spectra follow from them.
pub fn sobi(x: &Matrix, k: usize, lags: &[usize]) -> Result<Factorization> {
    check_k(x, k)?;
    let t = x.nrows();
    if lags.is_empty() {
        return Err(Error::invalid("sobi needs at least one lag"));
    }
    if let Some(&bad) = lags.iter().find(|&&l| l >= t) {
        return Err(Error::invalid(format!("lag {bad} must be below the number of spectra ({t})")));
    }
    let (_, xc) = center_columns(x);
    let r = svd(&xc)?;
    let floor = r.s[0] * 1e-12;
    if r.s[0] <= 0.0 {
        return Err(Error::TechniqueFailure("data has no variance".into()));
    }
    let sqrt_t = (t as f64).sqrt();
    // Whitened profiles, k × t, with identity sample covariance.
    let z = Matrix::from_fn(k, t, |i, j| sqrt_t * r.u[(j, i)]);

    let mats: Vec<Matrix> = lags
        .iter()
        .map(|&lag| {
            let mut c = Matrix::zeros(k, k);
            for j in 0..t - lag {
                for a in 0..k {
                    for b in 0..k {
                        c[(a, b)] += z[(a, j)] * z[(b, j + lag)];
                    }
                }
            }
            c /= (t - lag) as f64;
            (&c + c.transpose()) * 0.5
        })
        .collect();
    let jd = joint_diagonalize(&mats)?;

    // Σ_k·V_kᵀ/√T, with the vanishing directions left as zero.
    let scaled = Matrix::from_fn(k, x.ncols(), |i, c| {
        if r.s[i] > floor {
            r.s[i] * r.vt[(i, c)] / sqrt_t
        } else {
            0.0
        }
    });
    let components = jd.v.transpose() * scaled;
    let coefficients = z.transpose() * &jd.v;
    let mut f = Factorization::new(components, coefficients);
    f.converged = jd.converged;
    f.metadata.insert("lags".into(), Value::from(lags.to_vec()));
    f.metadata.insert("sweeps".into(), Value::from(jd.sweeps));
    sort_by_contribution(&mut f);
    Ok(f)
}
