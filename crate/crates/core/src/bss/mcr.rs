use serde_json::Value;

use super::nnmf::{preprocess_nonnegative, preprocessing_metadata};
use super::{check_k, Factorization, McrInit, McrRegression};
use crate::error::{Error, Result};
use crate::numkernel::{nnls_gram, solve_spd_or_ridge, svd, Matrix, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McrOptions {
    /// Stop when the relative change of the residual drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for McrOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

/// Multivariate curve resolution by alternating regression between
/// concentrations (`n_spectra × k`) and spectra (`k × n_points`).
///
/// `ols_als` uses unconstrained least squares in both directions; `nnls`
/// constrains the concentrations to be nonnegative and works on data made
/// nonnegative as for NNMF. With `McrInit::Provided`, `init_spectra` is
/// used when given, otherwise the magnitudes of the leading right singular
/// vectors.
pub fn mcr(
    x: &Matrix,
    k: usize,
    regression: McrRegression,
    init: McrInit,
    init_spectra: Option<&Matrix>,
    seed: u64,
    opts: &McrOptions,
) -> Result<Factorization> {
    check_k(x, k)?;
    let pre = match regression {
        McrRegression::Nnls => Some(preprocess_nonnegative(x, true, true)),
        McrRegression::OlsAls => None,
    };
    let data = pre.as_ref().map(|p| &p.data).unwrap_or(x);
    let mut s = match (init, init_spectra) {
        (McrInit::Provided, Some(given)) => {
            if given.nrows() != k || given.ncols() != x.ncols() {
                return Err(Error::invalid(format!(
                    "initial spectra must be {k} × {}, got {} × {}",
                    x.ncols(),
                    given.nrows(),
                    given.ncols()
                )));
            }
            given.clone()
        }
        (McrInit::Provided, None) => svd(data)?.vt.rows(0, k).abs(),
        (McrInit::Random, _) => {
            let mut rng = SeededRng::new(seed);
            Matrix::from_fn(k, x.ncols(), |_, _| rng.uniform())
        }
    };

    let total = data.norm_squared();
    let mut ridge = false;
    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut c = Matrix::zeros(x.nrows(), k);
    for _ in 0..opts.max_iter {
        let sst = &s * s.transpose();
        let sx = &s * data.transpose();
        c = match regression {
            McrRegression::OlsAls => {
                let (sol, r) = solve_spd_or_ridge(&sst, &sx)?;
                ridge |= r;
                sol.transpose()
            }
            McrRegression::Nnls => {
                let mut c = Matrix::zeros(x.nrows(), k);
                for row in 0..x.nrows() {
                    let sol = nnls_gram(&sst, sx.column(row).as_slice())?;
                    for (i, v) in sol.x.into_iter().enumerate() {
                        c[(row, i)] = v;
                    }
                }
                c
            }
        };
        let (sol, r) = solve_spd_or_ridge(&(c.transpose() * &c), &(c.transpose() * data))?;
        ridge |= r;
        s = sol;
        let resid = (data - &c * &s).norm_squared();
        let prev = history.last().copied();
        history.push(resid);
        if resid <= 1e-24 * total {
            converged = true;
            break;
        }
        if let Some(prev) = prev {
            if (prev - resid).abs() <= opts.tol * prev {
                converged = true;
                break;
            }
        }
    }
    let mut f = Factorization::new(s, c);
    f.converged = converged;
    f.metadata.insert("iterations".into(), Value::from(history.len()));
    f.metadata.insert(
        "relative_residual".into(),
        Value::from((history.last().copied().unwrap_or(total) / total.max(f64::MIN_POSITIVE)).sqrt()),
    );
    f.metadata.insert("residual_history".into(), Value::from(history));
    if ridge {
        f.metadata.insert("ridge_fallback".into(), Value::from(true));
    }
    if let Some(p) = &pre {
        preprocessing_metadata(&mut f, p);
    }
    Ok(f)
}
