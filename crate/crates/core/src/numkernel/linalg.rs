use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Dense real matrix. Spectra are stored one per row.
pub type Matrix = DMatrix<f64>;

/// Thin singular value decomposition `m = u * diag(s) * vt`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    /// Nonnegative, descending.
    pub s: Vec<f64>,
    pub vt: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * &self.vt
    }
}

#[derive(Debug, Clone)]
pub struct SymEig {
    /// Descending.
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns, in the order of `values`.
    pub vectors: Matrix,
}

pub fn check_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} contains non-finite values")))
    }
}

pub fn frobenius(m: &Matrix) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Thin SVD with singular values sorted in descending order.
///
/// Signs are fixed so that the largest-magnitude entry of every right
/// singular vector is positive, which makes the factorisation reproducible.
pub fn svd(m: &Matrix) -> Result<SvdResult> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::invalid("svd of an empty matrix"));
    }
    check_finite(m, "svd input")?;
    let dec = m
        .clone()
        .try_svd(true, true, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::NumericalFailure("svd did not converge".into()))?;
    let (u, vt) = match (dec.u, dec.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::NumericalFailure("svd factors missing".into())),
    };
    let raw = dec.singular_values;
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]).then(a.cmp(&b)));

    let p = order.len();
    let mut out_u = Matrix::zeros(m.nrows(), p);
    let mut out_vt = Matrix::zeros(p, m.ncols());
    let mut s = Vec::with_capacity(p);
    for (dst, &src) in order.iter().enumerate() {
        let row = vt.row(src);
        let pivot = row
            .iter()
            .copied()
            .fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        out_vt.row_mut(dst).copy_from(&(row * sign));
        out_u.column_mut(dst).copy_from(&(u.column(src) * sign));
        s.push(raw[src].max(0.0));
    }
    Ok(SvdResult {
        u: out_u,
        s,
        vt: out_vt,
    })
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
pub fn sym_eig(m: &Matrix) -> Result<SymEig> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::invalid("sym_eig needs a non-empty square matrix"));
    }
    check_finite(m, "sym_eig input")?;
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(Error::invalid(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let sym = (m + m.transpose()) * 0.5;
    let dec = SymmetricEigen::try_new(sym, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::NumericalFailure("eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..dec.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        dec.eigenvalues[b]
            .total_cmp(&dec.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let n = m.nrows();
    let mut vectors = Matrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let col = dec.eigenvectors.column(src);
        let pivot = col
            .iter()
            .copied()
            .fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vectors.column_mut(dst).copy_from(&(col * sign));
        values.push(dec.eigenvalues[src]);
    }
    Ok(SymEig { values, vectors })
}

/// Moore–Penrose pseudo-inverse; singular values below `rcond * s_max` are
/// treated as zero.
pub fn pinv(m: &Matrix, rcond: f64) -> Result<Matrix> {
    let dec = svd(m)?;
    let cutoff = rcond * dec.s.first().copied().unwrap_or(0.0);
    let mut v_sinv = dec.vt.transpose();
    for (j, &s) in dec.s.iter().enumerate() {
        let inv = if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 };
        v_sinv.column_mut(j).scale_mut(inv);
    }
    Ok(v_sinv * dec.u.transpose())
}

/// Solves `g * x = rhs` for symmetric positive (semi)definite `g`.
///
/// Falls back to a ridge-regularised solve (`g + 1e-10 * max(diag) * I`)
/// when the Cholesky factorisation fails. The returned flag is `true` when
/// the ridge was needed.
pub fn solve_spd_or_ridge(g: &Matrix, rhs: &Matrix) -> Result<(Matrix, bool)> {
    if let Some(ch) = g.clone().cholesky() {
        let x = ch.solve(rhs);
        if x.iter().all(|v| v.is_finite()) {
            return Ok((x, false));
        }
    }
    let n = g.nrows();
    let lambda = 1e-10 * g.diagonal().amax().max(f64::MIN_POSITIVE);
    let ridged = g + Matrix::identity(n, n) * lambda;
    match ridged.cholesky() {
        Some(ch) => Ok((ch.solve(rhs), true)),
        None => Ok((pinv(g, 1e-12)? * rhs, true)),
    }
}
