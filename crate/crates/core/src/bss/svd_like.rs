use serde_json::Value;

use super::{center_columns, Factorization};
use crate::error::Result;
use crate::numkernel::{svd, sym_eig, Matrix};

fn leading(u: &Matrix, s: &[f64], vt: &Matrix, k: usize) -> Factorization {
    let components = vt.rows(0, k).into_owned();
    let coefficients = Matrix::from_fn(u.nrows(), k, |r, i| u[(r, i)] * s[i]);
    let mut f = Factorization::new(components, coefficients);
    f.metadata.insert("singular_values".into(), Value::from(s[..k].to_vec()));
    f
}

/// Right singular vectors of the raw matrix as components, `U·S` as
/// coefficients.
pub fn svd_components(x: &Matrix, k: usize) -> Result<Factorization> {
    super::check_k(x, k)?;
    let r = svd(x)?;
    Ok(leading(&r.u, &r.s, &r.vt, k))
}

/// Leading `k` singular triplets only, obtained from the eigenvectors of the
/// small Gram matrix `X·Xᵀ`.
pub fn truncated_svd(x: &Matrix, k: usize) -> Result<Factorization> {
    super::check_k(x, k)?;
    let gram = x * x.transpose();
    let eig = sym_eig(&gram)?;
    let top = eig.values[0].max(0.0).sqrt();
    let mut s = Vec::with_capacity(k);
    let mut components = Matrix::zeros(k, x.ncols());
    for i in 0..k {
        let si = eig.values[i].max(0.0).sqrt();
        s.push(si);
        if si > top * 1e-13 {
            let v = eig.vectors.column(i).transpose() * x / si;
            components.row_mut(i).copy_from(&v);
        }
    }
    // Orient each component like the full SVD does.
    let mut u = eig.vectors.columns(0, k).into_owned();
    for i in 0..k {
        let row = components.row(i);
        let big = row.iter().fold(0.0f64, |m, v| if v.abs() > m.abs() { *v } else { m });
        if big < 0.0 {
            components.row_mut(i).neg_mut();
            u.column_mut(i).neg_mut();
        }
    }
    Ok(leading(&u, &s, &components, k))
}

/// SVD of the column-centred matrix.
pub fn pca(x: &Matrix, k: usize) -> Result<Factorization> {
    super::check_k(x, k)?;
    let (_, centered) = center_columns(x);
    let r = svd(&centered)?;
    let mut f = leading(&r.u, &r.s, &r.vt, k);
    f.metadata.insert("column_means_removed".into(), Value::from(true));
    Ok(f)
}
