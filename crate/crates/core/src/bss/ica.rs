use serde_json::Value;

use super::{check_k, sort_by_contribution, Factorization};
use crate::error::{Error, Result};
use crate::numkernel::{joint_diagonalize, sym_eig, Matrix, SeededRng};

/// Eigenvalues below this fraction of the largest are clamped before
/// inversion.
const EIGEN_FLOOR: f64 = 1e-12;

/// PCA whitening with spectral points as samples and mixture spectra as
/// variables.
#[derive(Debug, Clone)]
pub struct Whitening {
    /// Whitened signals, `k × n_points`, identity sample covariance.
    pub z: Matrix,
    /// `k × n_spectra`; `z = whitener · (x − row means)`.
    pub whitener: Matrix,
    /// `n_spectra × k`; maps whitened signals back to centred data.
    pub dewhitener: Matrix,
    pub row_means: Vec<f64>,
    pub eigenvalues: Vec<f64>,
}

pub fn whiten(x: &Matrix, k: usize) -> Result<Whitening> {
    check_k(x, k)?;
    let n = x.ncols() as f64;
    let row_means: Vec<f64> = x.row_iter().map(|r| r.sum() / n).collect();
    let xc = Matrix::from_fn(x.nrows(), x.ncols(), |r, c| x[(r, c)] - row_means[r]);
    let cov = symmetrize(&(&xc * xc.transpose() / n));
    let eig = sym_eig(&cov)?;
    if eig.values[0] <= 0.0 {
        return Err(Error::TechniqueFailure("data has no variance to whiten".into()));
    }
    let floor = eig.values[0] * EIGEN_FLOOR;
    let d: Vec<f64> = eig.values[..k].iter().map(|&v| v.max(floor)).collect();
    let e = eig.vectors.columns(0, k);
    let whitener = Matrix::from_fn(k, x.nrows(), |i, r| e[(r, i)] / d[i].sqrt());
    let dewhitener = Matrix::from_fn(x.nrows(), k, |r, i| e[(r, i)] * d[i].sqrt());
    let z = &whitener * &xc;
    Ok(Whitening {
        z,
        whitener,
        dewhitener,
        row_means,
        eigenvalues: eig.values,
    })
}

fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// `(W·Wᵀ)^(-1/2)·W`
fn symmetric_decorrelation(w: &Matrix) -> Result<Matrix> {
    let eig = sym_eig(&symmetrize(&(w * w.transpose())))?;
    let k = w.nrows();
    let floor = eig.values[0].max(f64::MIN_POSITIVE) * EIGEN_FLOOR;
    let mut inv_sqrt = Matrix::zeros(k, k);
    for (i, &v) in eig.values.iter().enumerate() {
        let col = eig.vectors.column(i);
        inv_sqrt += col * col.transpose() / v.max(floor).sqrt();
    }
    Ok(inv_sqrt * w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastIcaOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FastIcaOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 400,
        }
    }
}

/// Symmetric FastICA with the log-cosh contrast.
pub fn fastica(x: &Matrix, k: usize, seed: u64, opts: &FastIcaOptions) -> Result<Factorization> {
    let wh = whiten(x, k)?;
    let z = &wh.z;
    let n = z.ncols() as f64;
    let mut rng = SeededRng::new(seed);
    let mut w = symmetric_decorrelation(&Matrix::from_fn(k, k, |_, _| rng.gaussian()))?;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut g = &w * z;
        let mut g_prime_mean = vec![0.0; k];
        for i in 0..k {
            for c in 0..g.ncols() {
                let t = g[(i, c)].tanh();
                g[(i, c)] = t;
                g_prime_mean[i] += 1.0 - t * t;
            }
            g_prime_mean[i] /= n;
        }
        let mut w_new = &g * z.transpose() / n;
        for i in 0..k {
            for j in 0..k {
                w_new[(i, j)] -= g_prime_mean[i] * w[(i, j)];
            }
        }
        let w_new = symmetric_decorrelation(&w_new)?;
        let overlap = &w_new * w.transpose();
        let lim = (0..k)
            .map(|i| (overlap[(i, i)].abs() - 1.0).abs())
            .fold(0.0, f64::max);
        w = w_new;
        if lim < opts.tol {
            converged = true;
            break;
        }
    }
    let sources = &w * z;
    let coefficients = &wh.dewhitener * w.transpose();
    let mut f = Factorization::new(sources, coefficients);
    f.converged = converged;
    f.metadata.insert("iterations".into(), Value::from(iterations));
    f.metadata.insert("row_means".into(), Value::from(wh.row_means.clone()));
    sort_by_contribution(&mut f);
    Ok(f)
}

/// Fourth-order cumulant matrices of whitened signals, one per index pair
/// `p ≤ q`, scaled so the set is an orthonormal-basis projection.
fn cumulant_matrices(z: &Matrix) -> Vec<Matrix> {
    let k = z.nrows();
    let n = z.ncols() as f64;
    let mut out = Vec::with_capacity(k * (k + 1) / 2);
    for p in 0..k {
        for q in p..k {
            let zpq: Vec<f64> = (0..z.ncols()).map(|t| z[(p, t)] * z[(q, t)]).collect();
            let mut m = Matrix::zeros(k, k);
            for i in 0..k {
                for j in i..k {
                    let mut acc = 0.0;
                    for (t, w) in zpq.iter().enumerate() {
                        acc += z[(i, t)] * z[(j, t)] * w;
                    }
                    let mut c = acc / n;
                    if i == j && p == q {
                        c -= 1.0;
                    }
                    if i == p && j == q {
                        c -= 1.0;
                    }
                    if i == q && j == p {
                        c -= 1.0;
                    }
                    m[(i, j)] = c;
                    m[(j, i)] = c;
                }
            }
            if p != q {
                m *= std::f64::consts::SQRT_2;
            }
            out.push(m);
        }
    }
    out
}

/// JADE: joint diagonalisation of the whitened fourth-order cumulant
/// matrices.
pub fn jade(x: &Matrix, k: usize) -> Result<Factorization> {
    let wh = whiten(x, k)?;
    let mats = cumulant_matrices(&wh.z);
    let jd = joint_diagonalize(&mats)?;
    let sources = jd.v.transpose() * &wh.z;
    let coefficients = &wh.dewhitener * &jd.v;
    let mut f = Factorization::new(sources, coefficients);
    f.converged = jd.converged;
    f.metadata.insert("sweeps".into(), Value::from(jd.sweeps));
    f.metadata.insert("row_means".into(), Value::from(wh.row_means.clone()));
    sort_by_contribution(&mut f);
    Ok(f)
}
