use serde_json::Value;

use super::{check_k, Factorization, NnmfInit};
use crate::error::Result;
use crate::numkernel::{svd, Matrix, SeededRng};

/// Entries of an NNDSVD factor below this are treated as zero.
const NNDSVD_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnmfOptions {
    /// Negate spectra whose negative mass exceeds their positive mass.
    pub flip_negative_rows: bool,
    /// Add one constant to every entry so the matrix is nonnegative.
    pub global_offset: bool,
    pub max_iter: usize,
    /// Stop when a sweep lowers the objective by less than this fraction.
    pub tol: f64,
}

impl Default for NnmfOptions {
    fn default() -> Self {
        Self {
            flip_negative_rows: true,
            global_offset: true,
            max_iter: 1000,
            tol: 1e-9,
        }
    }
}

/// Data made nonnegative for the nonnegative factorizations.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub data: Matrix,
    pub flipped_rows: Vec<usize>,
    pub offset: f64,
}

pub fn preprocess_nonnegative(x: &Matrix, flip: bool, offset: bool) -> Preprocessed {
    let mut data = x.clone();
    let mut flipped_rows = Vec::new();
    if flip {
        for r in 0..data.nrows() {
            let row = data.row(r);
            let pos: f64 = row.iter().filter(|v| **v > 0.0).sum();
            let neg: f64 = -row.iter().filter(|v| **v < 0.0).sum::<f64>();
            if neg > pos {
                data.row_mut(r).neg_mut();
                flipped_rows.push(r);
            }
        }
    }
    let mut shift = 0.0;
    if offset {
        shift = (-data.min()).max(0.0);
        if shift > 0.0 {
            data.add_scalar_mut(shift);
        }
    }
    if !offset {
        // Whatever negativity remains is clipped.
        data.apply(|v| *v = v.max(0.0));
    }
    Preprocessed {
        data,
        flipped_rows,
        offset: shift,
    }
}

pub(crate) fn preprocessing_metadata(f: &mut Factorization, p: &Preprocessed) {
    f.metadata.insert("flipped_rows".into(), Value::from(p.flipped_rows.clone()));
    f.metadata.insert("offset".into(), Value::from(p.offset));
}

fn initialize(x: &Matrix, k: usize, init: NnmfInit, rng: &mut SeededRng) -> Result<(Matrix, Matrix)> {
    let (m, n) = (x.nrows(), x.ncols());
    let mean = x.mean();
    if init == NnmfInit::Random {
        let avg = (mean / k as f64).sqrt();
        let h = Matrix::from_fn(k, n, |_, _| avg * rng.gaussian().abs());
        let w = Matrix::from_fn(m, k, |_, _| avg * rng.gaussian().abs());
        return Ok((w, h));
    }
    let r = svd(x)?;
    let mut w = Matrix::zeros(m, k);
    let mut h = Matrix::zeros(k, n);
    let s0 = r.s[0].sqrt();
    for i in 0..m {
        w[(i, 0)] = s0 * r.u[(i, 0)].abs();
    }
    for c in 0..n {
        h[(0, c)] = s0 * r.vt[(0, c)].abs();
    }
    for j in 1..k.min(r.s.len()) {
        let x_col: Vec<f64> = (0..m).map(|i| r.u[(i, j)]).collect();
        let y_row: Vec<f64> = (0..n).map(|c| r.vt[(j, c)]).collect();
        let part = |v: &[f64], sign: f64| -> Vec<f64> { v.iter().map(|a| (sign * a).max(0.0)).collect() };
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let (xp, xn, yp, yn) = (part(&x_col, 1.0), part(&x_col, -1.0), part(&y_row, 1.0), part(&y_row, -1.0));
        let (xpn, xnn, ypn, ynn) = (norm(&xp), norm(&xn), norm(&yp), norm(&yn));
        let (mp, mn) = (xpn * ypn, xnn * ynn);
        let (u, v, nu, nv, sigma) = if mp > mn {
            (xp, yp, xpn, ypn, mp)
        } else {
            (xn, yn, xnn, ynn, mn)
        };
        if sigma <= 0.0 {
            continue;
        }
        let lbd = (r.s[j] * sigma).sqrt();
        for i in 0..m {
            w[(i, j)] = lbd * u[i] / nu;
        }
        for c in 0..n {
            h[(j, c)] = lbd * v[c] / nv;
        }
    }
    w.apply(|v| {
        if *v < NNDSVD_EPS {
            *v = 0.0
        }
    });
    h.apply(|v| {
        if *v < NNDSVD_EPS {
            *v = 0.0
        }
    });
    match init {
        NnmfInit::Nndsvda => {
            w.apply(|v| {
                if *v == 0.0 {
                    *v = mean
                }
            });
            h.apply(|v| {
                if *v == 0.0 {
                    *v = mean
                }
            });
        }
        NnmfInit::Nndsvdar => {
            w.apply(|v| {
                if *v == 0.0 {
                    *v = mean * rng.uniform() / 100.0
                }
            });
            h.apply(|v| {
                if *v == 0.0 {
                    *v = mean * rng.uniform() / 100.0
                }
            });
        }
        _ => {}
    }
    Ok((w, h))
}

fn objective(x: &Matrix, w: &Matrix, h: &Matrix) -> f64 {
    0.5 * (x - w * h).norm_squared()
}

/// One Gauss–Seidel sweep of exact coordinate minimisation over the columns
/// of `w` for fixed `h` (`x ≈ w·h`).
fn update_factor(w: &mut Matrix, hht: &Matrix, xht: &Matrix) {
    let k = w.ncols();
    for j in 0..k {
        let d = hht[(j, j)];
        if d <= 0.0 {
            continue;
        }
        for i in 0..w.nrows() {
            let mut grad = xht[(i, j)];
            for t in 0..k {
                grad -= w[(i, t)] * hht[(t, j)];
            }
            w[(i, j)] = (w[(i, j)] + grad / d).max(0.0);
        }
    }
}

/// Nonnegative matrix factorization by hierarchical alternating least
/// squares (coordinate descent on the Frobenius loss).
///
/// The data are first made nonnegative (see [`NnmfOptions`]). The raw
/// factors are returned; flipped rows and the offset are recorded in the
/// metadata.
pub fn nnmf(x: &Matrix, k: usize, init: NnmfInit, seed: u64, opts: &NnmfOptions) -> Result<Factorization> {
    check_k(x, k)?;
    let pre = preprocess_nonnegative(x, opts.flip_negative_rows, opts.global_offset);
    let mut f = factorize(&pre.data, k, init, seed, opts)?;
    preprocessing_metadata(&mut f, &pre);
    f.metadata.insert("init".into(), Value::from(format!("{init:?}").to_lowercase()));
    Ok(f)
}

/// Factorization of already nonnegative data.
pub fn factorize(x: &Matrix, k: usize, init: NnmfInit, seed: u64, opts: &NnmfOptions) -> Result<Factorization> {
    let mut rng = SeededRng::new(seed);
    let (mut w, mut h) = initialize(x, k, init, &mut rng)?;
    let scale = x.norm_squared();
    let mut history = vec![objective(x, &w, &h)];
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let hht = &h * h.transpose();
        let xht = x * h.transpose();
        update_factor(&mut w, &hht, &xht);
        let wtw = w.transpose() * &w;
        let wtx = w.transpose() * x;
        let mut ht = h.transpose();
        update_factor(&mut ht, &wtw, &wtx.transpose());
        h = ht.transpose();
        let obj = objective(x, &w, &h);
        let prev = *history.last().unwrap_or(&obj);
        history.push(obj);
        if obj <= 1e-30 * scale || prev - obj <= opts.tol * prev {
            converged = true;
            break;
        }
    }
    let mut f = Factorization::new(h, w);
    f.converged = converged;
    f.metadata.insert("iterations".into(), Value::from(history.len() - 1));
    f.metadata.insert("objective_history".into(), Value::from(history));
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nonneg_low_rank(m: usize, n: usize, k: usize, seed: u64) -> Matrix {
        let mut rng = SeededRng::new(seed);
        let w = Matrix::from_fn(m, k, |_, _| rng.uniform());
        let h = Matrix::from_fn(k, n, |_, _| rng.uniform().powi(3));
        w * h
    }

    fn history(f: &Factorization) -> Vec<f64> {
        serde_json::from_value(f.metadata["objective_history"].clone()).unwrap()
    }

    #[test]
    fn exact_nonnegative_rank_k() {
        let x = nonneg_low_rank(20, 200, 3, 1);
        let opts = NnmfOptions {
            max_iter: 20_000,
            tol: 1e-15,
            ..NnmfOptions::default()
        };
        let f = factorize(&x, 3, NnmfInit::Nndsvda, 0, &opts).unwrap();
        let rel = (&f.coefficients * &f.components - &x).norm() / x.norm();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn objective_never_increases() {
        let x = nonneg_low_rank(20, 150, 4, 2);
        for init in NnmfInit::ALL {
            let f = factorize(&x, 4, init, 3, &NnmfOptions::default()).unwrap();
            let h = history(&f);
            assert!(h.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{init:?}");
        }
    }

    #[test]
    fn nndsvd_gives_a_head_start() {
        let mut wins = 0;
        for trial in 0..50 {
            let x = nonneg_low_rank(20, 120, 3, 100 + trial);
            let mut rng = SeededRng::new(trial);
            let (w, h) = initialize(&x, 3, NnmfInit::Nndsvd, &mut rng).unwrap();
            let nndsvd = objective(&x, &w, &h);
            let best_random = (0..10)
                .map(|_| {
                    let (w, h) = initialize(&x, 3, NnmfInit::Random, &mut rng).unwrap();
                    objective(&x, &w, &h)
                })
                .fold(f64::INFINITY, f64::min);
            if nndsvd <= best_random {
                wins += 1;
            }
        }
        assert!(wins >= 40, "{wins}/50");
    }

    #[test]
    fn preprocessing_flips_and_offsets() {
        let x = Matrix::from_row_slice(2, 3, &[-1.0, -2.0, 0.5, 1.0, -0.5, 2.0]);
        let p = preprocess_nonnegative(&x, true, true);
        assert_eq!(p.flipped_rows, vec![0]);
        assert_eq!(p.offset, 0.5);
        assert!(p.data.iter().all(|&v| v >= 0.0));
        assert_eq!(p.data[(0, 0)], 1.5);
    }

    #[test]
    fn signed_input_is_recorded() {
        let mut x = nonneg_low_rank(20, 100, 2, 5);
        x.row_mut(3).neg_mut();
        let f = nnmf(&x, 2, NnmfInit::Nndsvdar, 1, &NnmfOptions::default()).unwrap();
        assert_eq!(f.metadata["flipped_rows"], serde_json::json!([3]));
        assert_eq!(f.metadata["offset"], serde_json::json!(0.0));
        assert!(f.components.iter().all(|&v| v >= 0.0));
    }
}
