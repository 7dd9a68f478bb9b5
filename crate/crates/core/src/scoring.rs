//! Matching predicted components to pure components.
//!
//! Each predicted spectrum is compared to each pure spectrum with an affine
//! least-squares fit `predicted ≈ B + M·pure`; the residual sum of squares is
//! the lack of fit. The one-to-one assignment maximising `Σ 1/lack_of_fit`
//! is then found exactly.
//!
//! Raw component scale is arbitrary, so the lack of fit that is scored is
//! measured in the units of the pure spectrum: the residual of the best
//! affine map of the prediction onto the pure, `min Σ(pure − b − m·pred)²`,
//! which equals `‖pure − mean‖²·(1 − r²)`. It does not change when a
//! technique rescales or flips its output. The literal fit of the prediction
//! as `B + M·pure` is kept alongside for reference.

use serde::{Deserialize, Serialize};

use crate::bss::ComponentSet;
use crate::error::{Error, Result};
use crate::lineshape::PureComponent;
use crate::numkernel::{assign_max, Matrix};

/// Floor on lack of fit inside the inverse score.
pub const SCORE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairFit {
    /// Additive offset.
    pub b: f64,
    /// Multiplier applied to the pure spectrum.
    pub m: f64,
    pub lack_of_fit: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Closed-form least-squares fit of `predicted` as `B + M·pure`.
pub fn fit_pair(predicted: &[f64], pure: &[f64]) -> Result<PairFit> {
    if predicted.len() != pure.len() {
        return Err(Error::invalid(format!(
            "spectra differ in length ({} vs {})",
            predicted.len(),
            pure.len()
        )));
    }
    if pure.len() < 2 {
        return Err(Error::invalid("spectra need at least two points"));
    }
    let (mp, mq) = (mean(predicted), mean(pure));
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (p, q) in predicted.iter().zip(pure) {
        let dq = q - mq;
        sxx += dq * dq;
        sxy += dq * (p - mp);
    }
    if !(sxx > 0.0) || pure.iter().all(|&q| q == pure[0]) {
        return Err(Error::DegenerateFit);
    }
    let m = sxy / sxx;
    let b = mp - m * mq;
    let lack_of_fit = predicted
        .iter()
        .zip(pure)
        .map(|(p, q)| (p - b - m * q).powi(2))
        .sum();
    Ok(PairFit { b, m, lack_of_fit })
}

/// Lack of fit divided by the centred sum of squares of `predicted`
/// (`1 − r²`); 1 for a constant prediction.
pub fn normalized_lack_of_fit(predicted: &[f64], pure: &[f64]) -> Result<f64> {
    let fit = fit_pair(predicted, pure)?;
    let mp = mean(predicted);
    let ss: f64 = predicted.iter().map(|p| (p - mp).powi(2)).sum();
    if ss <= constant_threshold(predicted) {
        return Ok(1.0);
    }
    Ok((fit.lack_of_fit / ss).clamp(0.0, 1.0))
}

fn constant_threshold(v: &[f64]) -> f64 {
    1e-28 * v.iter().map(|x| x * x).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub predicted: usize,
    pub pure: usize,
    /// Fit of the predicted spectrum exactly as the technique returned it.
    pub raw_fit: PairFit,
    /// Lack of fit in pure-spectrum units; this is what is scored and
    /// aggregated.
    pub lack_of_fit: f64,
    pub normalized_lack_of_fit: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub pairs: Vec<MatchedPair>,
    pub ensemble_score: f64,
    pub discarded_predicted: Vec<usize>,
    pub unmatched_pure: Vec<usize>,
    pub n_points: usize,
    pub dataset_error: Option<f64>,
}

/// Pairwise lack of fit in pure-spectrum units, predicted rows by pure
/// rows. A constant prediction explains nothing and scores the pure's full
/// centred sum of squares.
pub fn lack_of_fit_matrix(predicted: &Matrix, pures: &Matrix) -> Result<Matrix> {
    if predicted.ncols() != pures.ncols() {
        return Err(Error::invalid(format!(
            "predicted spectra have {} points but pure spectra have {}",
            predicted.ncols(),
            pures.ncols()
        )));
    }
    let pure_rows: Vec<Vec<f64>> = pures.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut out = Matrix::zeros(predicted.nrows(), pures.nrows());
    for i in 0..predicted.nrows() {
        let row: Vec<f64> = predicted.row(i).iter().copied().collect();
        let mp = mean(&row);
        let ss: f64 = row.iter().map(|p| (p - mp).powi(2)).sum();
        let constant = ss <= constant_threshold(&row);
        for (q, pure) in pure_rows.iter().enumerate() {
            out[(i, q)] = if constant {
                let mq = mean(pure);
                if pure.iter().all(|&v| v == pure[0]) {
                    return Err(Error::DegenerateFit);
                }
                pure.iter().map(|v| (v - mq).powi(2)).sum()
            } else {
                fit_pair(pure, &row)?.lack_of_fit
            };
        }
    }
    Ok(out)
}

pub fn score_matrix(lack_of_fit: &Matrix) -> Matrix {
    lack_of_fit.map(|l| 1.0 / l.max(SCORE_FLOOR))
}

/// Optimal one-to-one matching of predicted rows to pure rows.
pub fn match_components(predicted: &Matrix, pures: &Matrix) -> Result<MatchReport> {
    if predicted.nrows() == 0 || pures.nrows() == 0 {
        return Err(Error::invalid("need at least one predicted and one pure component"));
    }
    crate::numkernel::check_finite(predicted, "predicted components")?;
    crate::numkernel::check_finite(pures, "pure components")?;
    let lof = lack_of_fit_matrix(predicted, pures)?;
    let scores = score_matrix(&lof);
    let assignment = assign_max(&scores)?;
    let n_points = pures.ncols();
    let mut pairs = Vec::with_capacity(assignment.pairs.len());
    for &(p, q) in &assignment.pairs {
        let pred: Vec<f64> = predicted.row(p).iter().copied().collect();
        let pure: Vec<f64> = pures.row(q).iter().copied().collect();
        pairs.push(MatchedPair {
            predicted: p,
            pure: q,
            raw_fit: fit_pair(&pred, &pure)?,
            lack_of_fit: lof[(p, q)],
            normalized_lack_of_fit: normalized_lack_of_fit(&pred, &pure)?,
            score: scores[(p, q)],
        });
    }
    let discarded_predicted = (0..predicted.nrows())
        .filter(|i| !assignment.pairs.iter().any(|(p, _)| p == i))
        .collect();
    let unmatched_pure = (0..pures.nrows())
        .filter(|j| !assignment.pairs.iter().any(|(_, q)| q == j))
        .collect();
    let mut report = MatchReport {
        ensemble_score: pairs.iter().map(|p| p.score).sum(),
        pairs,
        discarded_predicted,
        unmatched_pure,
        n_points,
        dataset_error: None,
    };
    report.dataset_error = dataset_error(&report, n_points).ok();
    Ok(report)
}

/// Matches a technique's output against the pure components it should
/// recover.
pub fn best_assignment(predicted: &ComponentSet, pures: &[&PureComponent]) -> Result<MatchReport> {
    let n = predicted.components.ncols();
    if pures.iter().any(|p| p.intensity.len() != n) {
        return Err(Error::invalid("pure and predicted spectra differ in length"));
    }
    let pure_matrix = Matrix::from_fn(pures.len(), n, |i, c| pures[i].intensity[c]);
    match_components(&predicted.components, &pure_matrix)
}

/// Mean over matched pairs of `lack_of_fit / n_points`.
pub fn dataset_error(report: &MatchReport, n_points: usize) -> Result<f64> {
    if report.pairs.is_empty() {
        return Err(Error::Undefined("no matched pairs".into()));
    }
    if n_points == 0 {
        return Err(Error::invalid("n_points must be positive"));
    }
    Ok(report.pairs.iter().map(|p| p.lack_of_fit / n_points as f64).sum::<f64>() / report.pairs.len() as f64)
}

/// `mean(plus) / mean(exact)` over the same datasets.
pub fn overprediction_ratio(exact: &[f64], plus: &[f64]) -> Result<f64> {
    if exact.is_empty() || exact.len() != plus.len() {
        return Err(Error::invalid("error lists must be non-empty and of equal length"));
    }
    let denom = mean(exact);
    if denom == 0.0 {
        return Err(Error::Undefined("mean error at the exact component count is zero".into()));
    }
    Ok(mean(plus) / denom)
}
