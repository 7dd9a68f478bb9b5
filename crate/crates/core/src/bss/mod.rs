//! Blind source separation techniques. Each one maps a data matrix (one
//! mixture spectrum per row) and a component count `k` to a
//! [`ComponentSet`]: `k` predicted spectra plus per-spectrum coefficients.
//!
//! Raw outputs carry arbitrary sign, scale and order; quality is only
//! assessed after alignment in [`crate::scoring`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::numkernel::Matrix;
use crate::synth::MixtureDataset;

mod ica;
mod mcr;
mod nnmf;
mod simplisma;
mod sobi;
mod svd_like;
mod vca;

pub use ica::{fastica, jade, whiten, FastIcaOptions, Whitening};
pub use mcr::{mcr, McrOptions};
pub use nnmf::{factorize, nnmf, preprocess_nonnegative, NnmfOptions, Preprocessed};
pub use simplisma::simplisma;
pub use sobi::{sobi, DEFAULT_LAGS};
pub use svd_like::{pca, svd_components, truncated_svd};
pub use vca::vca;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NnmfInit {
    Random,
    Nndsvd,
    Nndsvda,
    Nndsvdar,
}

impl NnmfInit {
    pub const ALL: [NnmfInit; 4] = [Self::Random, Self::Nndsvd, Self::Nndsvda, Self::Nndsvdar];

    fn name(self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::Nndsvd => "nndsvd",
            Self::Nndsvda => "nndsvda",
            Self::Nndsvdar => "nndsvdar",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McrRegression {
    OlsAls,
    Nnls,
}

impl McrRegression {
    fn name(self) -> &'static str {
        match self {
            Self::OlsAls => "ols_als",
            Self::Nnls => "nnls",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum McrInit {
    /// Magnitudes of the leading right singular vectors, unless explicit
    /// starting spectra are supplied.
    Provided,
    Random,
}

pub const SIMPLISMA_OFFSETS: [u32; 5] = [0, 2, 8, 12, 15];

/// Stable technique identifier, e.g. `nnmf:nndsvdar`, `simplisma:offset8`,
/// `mcr:nnls:random`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TechniqueId {
    Svd,
    TruncatedSvd,
    Pca,
    FastIca,
    Jade,
    Sobi,
    Vca,
    Nnmf(NnmfInit),
    Simplisma { offset_percent: u32 },
    Mcr { regression: McrRegression, init: McrInit },
}

impl TechniqueId {
    /// Every supported technique variant.
    pub fn all() -> Vec<TechniqueId> {
        let mut out = vec![
            Self::Svd,
            Self::TruncatedSvd,
            Self::Pca,
            Self::FastIca,
            Self::Jade,
            Self::Sobi,
            Self::Vca,
        ];
        out.extend(NnmfInit::ALL.map(Self::Nnmf));
        out.extend(SIMPLISMA_OFFSETS.map(|offset_percent| Self::Simplisma { offset_percent }));
        for regression in [McrRegression::OlsAls, McrRegression::Nnls] {
            for init in [McrInit::Provided, McrInit::Random] {
                out.push(Self::Mcr { regression, init });
            }
        }
        out
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Svd => "svd",
            Self::TruncatedSvd => "truncated_svd",
            Self::Pca => "pca",
            Self::FastIca => "fastica",
            Self::Jade => "jade",
            Self::Sobi => "sobi",
            Self::Vca => "vca",
            Self::Nnmf(_) => "nnmf",
            Self::Simplisma { .. } => "simplisma",
            Self::Mcr { .. } => "mcr",
        }
    }

    /// Row label used when sub-variants are pooled: the family, except that
    /// the two MCR regressions stay separate.
    pub fn group(&self) -> String {
        match self {
            Self::Mcr { regression, .. } => format!("mcr:{}", regression.name()),
            other => other.family().to_string(),
        }
    }

    pub fn uses_seed(&self) -> bool {
        matches!(
            self,
            Self::FastIca
                | Self::Vca
                | Self::Nnmf(NnmfInit::Random | NnmfInit::Nndsvdar)
                | Self::Mcr { init: McrInit::Random, .. }
        )
    }
}

impl fmt::Display for TechniqueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Nnmf(init) => write!(f, "nnmf:{}", init.name()),
            Self::Simplisma { offset_percent } => write!(f, "simplisma:offset{offset_percent}"),
            Self::Mcr { regression, init } => {
                write!(f, "mcr:{}", regression.name())?;
                if *init == McrInit::Random {
                    f.write_str(":random")?;
                }
                Ok(())
            }
            other => f.write_str(other.family()),
        }
    }
}

impl FromStr for TechniqueId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TechniqueId::all()
            .into_iter()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| {
                let valid: Vec<String> = TechniqueId::all().iter().map(|t| t.to_string()).collect();
                Error::invalid(format!("unknown technique '{s}'; valid identifiers: {}", valid.join(", ")))
            })
    }
}

impl Serialize for TechniqueId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TechniqueId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Output of one technique run.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSet {
    pub technique: TechniqueId,
    pub k_requested: usize,
    /// One predicted spectrum per row (`k × n_points`).
    pub components: Matrix,
    /// Mixing weights (`n_spectra × k`).
    pub coefficients: Matrix,
    pub converged: bool,
    pub runtime_seconds: f64,
    pub metadata: BTreeMap<String, Value>,
}

/// Raw output of a single technique, before runtime and validity checks are
/// attached by [`decompose_matrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub components: Matrix,
    pub coefficients: Matrix,
    pub converged: bool,
    pub metadata: BTreeMap<String, Value>,
}

impl Factorization {
    pub fn new(components: Matrix, coefficients: Matrix) -> Self {
        Self {
            components,
            coefficients,
            converged: true,
            metadata: BTreeMap::new(),
        }
    }
}

pub(crate) fn check_k(x: &Matrix, k: usize) -> Result<()> {
    let max = x.nrows().min(x.ncols());
    if k == 0 || k > max {
        return Err(Error::invalid(format!("k must lie in 1..={max}, got {k}")));
    }
    Ok(())
}

/// Runs `technique` on the spectra of `dataset`.
pub fn decompose(dataset: &MixtureDataset, technique: TechniqueId, k: usize, seed: u64) -> Result<ComponentSet> {
    decompose_matrix(&dataset.spectra, technique, k, seed)
}

pub fn decompose_matrix(x: &Matrix, technique: TechniqueId, k: usize, seed: u64) -> Result<ComponentSet> {
    check_k(x, k)?;
    crate::numkernel::check_finite(x, "data matrix")?;
    let start = Clock::now();
    let factors = match technique {
        TechniqueId::Svd => svd_components(x, k)?,
        TechniqueId::TruncatedSvd => truncated_svd(x, k)?,
        TechniqueId::Pca => pca(x, k)?,
        TechniqueId::FastIca => fastica(x, k, seed, &FastIcaOptions::default())?,
        TechniqueId::Jade => jade(x, k)?,
        TechniqueId::Sobi => sobi(x, k, &DEFAULT_LAGS)?,
        TechniqueId::Vca => vca(x, k, seed)?,
        TechniqueId::Nnmf(init) => nnmf(x, k, init, seed, &NnmfOptions::default())?,
        TechniqueId::Simplisma { offset_percent } => simplisma(x, k, offset_percent as f64)?,
        TechniqueId::Mcr { regression, init } => mcr(x, k, regression, init, None, seed, &McrOptions::default())?,
    };
    let runtime_seconds = start.elapsed();
    finish(technique, k, factors, runtime_seconds)
}

fn finish(technique: TechniqueId, k: usize, mut f: Factorization, runtime_seconds: f64) -> Result<ComponentSet> {
    if f.components.nrows() != k {
        return Err(Error::TechniqueFailure(format!(
            "{technique} produced {} components, expected {k}",
            f.components.nrows()
        )));
    }
    if f.components.iter().chain(f.coefficients.iter()).any(|v| !v.is_finite()) {
        return Err(Error::TechniqueFailure(format!("{technique} produced non-finite values")));
    }
    let zero: Vec<usize> = (0..k)
        .filter(|&i| f.components.row(i).iter().all(|&v| v == 0.0))
        .collect();
    if !zero.is_empty() {
        f.metadata.insert("zero_components".into(), Value::from(zero));
    }
    Ok(ComponentSet {
        technique,
        k_requested: k,
        components: f.components,
        coefficients: f.coefficients,
        converged: f.converged,
        runtime_seconds,
        metadata: f.metadata,
    })
}

/// Wall clock that degrades to a constant zero where no timer exists.
struct Clock {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Clock {
    fn now() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

/// Reorders components (and the matching coefficient columns) by
/// decreasing `‖coefficient column‖·‖component row‖`.
pub(crate) fn sort_by_contribution(f: &mut Factorization) {
    let k = f.components.nrows();
    let weight: Vec<f64> = (0..k)
        .map(|i| f.coefficients.column(i).norm() * f.components.row(i).norm())
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| weight[b].total_cmp(&weight[a]).then(a.cmp(&b)));
    f.components = Matrix::from_fn(k, f.components.ncols(), |i, c| f.components[(order[i], c)]);
    f.coefficients = Matrix::from_fn(f.coefficients.nrows(), k, |r, i| f.coefficients[(r, order[i])]);
}

/// Column means of `x` and the column-centred copy.
pub(crate) fn center_columns(x: &Matrix) -> (Vec<f64>, Matrix) {
    let m = x.nrows() as f64;
    let means: Vec<f64> = x.column_iter().map(|c| c.sum() / m).collect();
    let centered = Matrix::from_fn(x.nrows(), x.ncols(), |r, c| x[(r, c)] - means[c]);
    (means, centered)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers_round_trip() {
        let all = TechniqueId::all();
        assert_eq!(all.len(), 20);
        for t in &all {
            let s = t.to_string();
            assert_eq!(s.parse::<TechniqueId>().unwrap(), *t, "{s}");
        }
        assert_eq!("mcr:nnls:random".parse::<TechniqueId>().unwrap().to_string(), "mcr:nnls:random");
        assert_eq!("simplisma:offset8".parse::<TechniqueId>().unwrap(), TechniqueId::Simplisma { offset_percent: 8 });
    }

    #[test]
    fn unknown_identifier_lists_valid_ones() {
        let err = "simplisma:offset3".parse::<TechniqueId>().unwrap_err().to_string();
        assert!(err.contains("simplisma:offset8"));
        assert!(err.contains("nnmf:nndsvdar"));
        assert!("ica".parse::<TechniqueId>().is_err());
    }

    #[test]
    fn serde_uses_string_form() {
        let t = TechniqueId::Mcr {
            regression: McrRegression::OlsAls,
            init: McrInit::Random,
        };
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, "\"mcr:ols_als:random\"");
        assert_eq!(serde_json::from_str::<TechniqueId>(&json).unwrap(), t);
    }

    #[test]
    fn k_bounds() {
        let x = Matrix::from_fn(20, 50, |r, c| ((r * 7 + c * 3) % 11) as f64);
        assert!(decompose_matrix(&x, TechniqueId::Svd, 0, 0).is_err());
        assert!(decompose_matrix(&x, TechniqueId::Svd, 21, 0).is_err());
        assert!(decompose_matrix(&x, TechniqueId::Svd, 20, 0).is_ok());
    }
}
