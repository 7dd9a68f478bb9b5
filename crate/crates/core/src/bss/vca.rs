use serde_json::Value;

use super::{check_k, Factorization};
use crate::error::Result;
use crate::numkernel::{pinv, solve_spd_or_ridge, svd, Matrix, SeededRng};

/// Estimated signal-to-noise ratio (dB) of the data in a `p`-dimensional
/// subspace; infinite when the subspace captures all the energy.
fn estimate_snr(x: &Matrix, means: &[f64], projected_energy: f64, p: usize) -> f64 {
    let (m, l) = (x.nrows() as f64, x.ncols() as f64);
    let p_y = x.iter().map(|v| v * v).sum::<f64>() / (m * l);
    let p_x = projected_energy / (m * l) + means.iter().map(|v| v * v).sum::<f64>() / l;
    let noise = p_y - p_x;
    let signal = p_x - p as f64 / l * p_y;
    if noise <= 0.0 {
        return f64::INFINITY;
    }
    if signal <= 0.0 {
        return f64::NEG_INFINITY;
    }
    10.0 * (signal / noise).log10()
}

/// Vertex component analysis. Each mixture spectrum is a point in spectral
/// space; the `k` most extreme points of the data simplex are returned as
/// components and the mixing weights are fitted by least squares.
pub fn vca(x: &Matrix, k: usize, seed: u64) -> Result<Factorization> {
    check_k(x, k)?;
    let (m, l) = (x.nrows(), x.ncols());
    let means: Vec<f64> = x.column_iter().map(|c| c.sum() / m as f64).collect();
    let centred = Matrix::from_fn(m, l, |r, c| x[(r, c)] - means[c]);
    let rc = svd(&centred)?;
    // Coordinates of each spectrum in the leading k-dimensional subspace of
    // the centred data.
    let xp = Matrix::from_fn(k, m, |i, r| rc.u[(r, i)] * rc.s[i]);
    let projected_energy: f64 = rc.s[..k].iter().map(|s| s * s).sum();
    let snr = estimate_snr(x, &means, projected_energy, k);
    let threshold = 15.0 + 10.0 * (k as f64).log10();
    let projective = k == 1 || snr >= threshold;

    // `y` holds one column per spectrum; `rp` the projected spectra.
    let (y, rp) = if projective {
        let r = svd(x)?;
        let coords = Matrix::from_fn(k, m, |i, s| r.u[(s, i)] * r.s[i]);
        let rp = coords.transpose() * r.vt.rows(0, k);
        let u = Matrix::from_fn(k, 1, |i, _| coords.row(i).sum() / m as f64);
        let mut y = coords.clone();
        for s in 0..m {
            let d = (u.transpose() * coords.column(s))[(0, 0)];
            let d = if d.abs() > f64::MIN_POSITIVE { d } else { f64::MIN_POSITIVE };
            y.column_mut(s).scale_mut(1.0 / d);
        }
        (y, rp)
    } else {
        let d = k - 1;
        let coords = xp.rows(0, d).into_owned();
        let rp = Matrix::from_fn(m, l, |s, c| {
            means[c] + (0..d).map(|i| coords[(i, s)] * rc.vt[(i, c)]).sum::<f64>()
        });
        let c = (0..m).map(|s| coords.column(s).norm()).fold(0.0, f64::max);
        let y = Matrix::from_fn(k, m, |i, s| if i < d { coords[(i, s)] } else { c });
        (y, rp)
    };

    let mut rng = SeededRng::new(seed);
    let mut a = Matrix::zeros(k, k);
    a[(k - 1, 0)] = 1.0;
    let mut picks = Vec::with_capacity(k);
    for i in 0..k {
        let w = Matrix::from_fn(k, 1, |_, _| rng.uniform());
        let mut f = &w - &a * pinv(&a, 1e-12)? * &w;
        let norm = f.norm();
        if norm > 0.0 {
            f /= norm;
        }
        let v = f.transpose() * &y;
        let best = (0..m)
            .max_by(|&p, &q| v[(0, p)].abs().total_cmp(&v[(0, q)].abs()).then(q.cmp(&p)))
            .unwrap_or(0);
        picks.push(best);
        a.column_mut(i).copy_from(&y.column(best));
    }

    let components = Matrix::from_fn(k, l, |i, c| rp[(picks[i], c)]);
    let gram = &components * components.transpose();
    let rhs = &components * x.transpose();
    let (sol, ridge) = solve_spd_or_ridge(&gram, &rhs)?;
    let coefficients = sol.transpose();
    let mut out = Factorization::new(components, coefficients);
    out.metadata.insert("selected_spectra".into(), Value::from(picks));
    out.metadata.insert(
        "branch".into(),
        Value::from(if projective { "projective" } else { "mean_subtracted" }),
    );
    out.metadata.insert("snr_db".into(), serde_json::json!(if snr.is_finite() { Some(snr) } else { None }));
    if ridge {
        out.metadata.insert("ridge_fallback".into(), Value::from(true));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rows are convex combinations of `k` vertices; the first `k` rows are
    /// the vertices themselves.
    fn simplex_data(k: usize, n: usize, seed: u64) -> (Matrix, Matrix) {
        let mut rng = SeededRng::new(seed);
        let vertices = Matrix::from_fn(k, n, |_, _| rng.uniform());
        let mut w = Matrix::zeros(20, k);
        for r in 0..20 {
            if r < k {
                w[(r, r)] = 1.0;
            } else {
                let raw: Vec<f64> = (0..k).map(|_| rng.uniform() + 0.05).collect();
                let s: f64 = raw.iter().sum();
                for i in 0..k {
                    w[(r, i)] = raw[i] / s;
                }
            }
        }
        (&w * &vertices, vertices)
    }

    #[test]
    fn recovers_simplex_vertices() {
        for k in [2usize, 3, 5] {
            let (x, v) = simplex_data(k, 200, k as u64);
            let f = vca(&x, k, 11).unwrap();
            assert_eq!(f.metadata["branch"], "projective");
            for q in 0..k {
                let best = (0..k)
                    .map(|i| (f.components.row(i) - v.row(q)).amax())
                    .fold(f64::INFINITY, f64::min);
                assert!(best < 1e-6, "k={k} vertex {q}: {best}");
            }
        }
    }

    #[test]
    fn single_component_follows_dominant_direction() {
        let (x, _) = simplex_data(3, 100, 9);
        let f = vca(&x, 1, 0).unwrap();
        let top = svd(&x).unwrap().vt.row(0).into_owned();
        let c = f.components.row(0).normalize();
        assert!(c.dot(&top).abs() > 0.999);
    }

    #[test]
    fn extra_component_keeps_existing_ones() {
        let (x, _) = simplex_data(3, 150, 21);
        let a = vca(&x, 3, 5).unwrap();
        let b = vca(&x, 4, 5).unwrap();
        for i in 0..3 {
            let ai = a.components.row(i).normalize();
            let best = (0..4)
                .map(|j| b.components.row(j).normalize().dot(&ai).abs())
                .fold(0.0, f64::max);
            assert!(best > 0.99, "{best}");
        }
    }

    #[test]
    fn low_snr_takes_mean_subtracted_branch() {
        let (x, _) = simplex_data(3, 300, 4);
        let mut rng = SeededRng::new(1);
        let noisy = x.map(|v| v + 0.3 * rng.gaussian());
        let f = vca(&noisy, 3, 0).unwrap();
        assert_eq!(f.metadata["branch"], "mean_subtracted");
    }
}
