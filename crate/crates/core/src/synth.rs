//! Mixture datasets: weighted sums of pure components following
//! inversion-recovery or nutation intensity series, plus Gaussian noise.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lineshape::{PureComponent, SpectrumGrid};
use crate::numkernel::{Matrix, SeededRng};

/// Every dataset holds this many mixture spectra.
pub const N_SPECTRA: usize = 20;

/// Smallest and largest component count of a mixture dataset.
pub const MIN_COMPONENTS: usize = 2;
pub const MAX_COMPONENTS: usize = 10;

/// `τ_max / T1` at which `1 − 2e^(−τ/T1)` reaches 0.985.
pub const RECOVERY_FACTOR: f64 = 4.8929;

pub const T1_RANGE: (f64, f64) = (0.5, 2.0);
pub const INVERSION_AMPLITUDE_RANGE: (f64, f64) = (0.2, 1.0);
pub const AMPLITUDE_FLOOR: f64 = 0.2;
pub const NUTATION_BASE_FREQUENCY: f64 = 0.5;
pub const NUTATION_MAX_FREQUENCY: f64 = 0.75;

/// Noise standard deviations used throughout the benchmark.
pub const NOISE_LADDER: [f64; 6] = [0.0, 0.0001, 0.000178, 0.000316, 0.000562, 0.001];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityModel {
    Inversion,
    Nutation,
}

impl fmt::Display for IntensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Inversion => "inversion",
            Self::Nutation => "nutation",
        })
    }
}

impl FromStr for IntensityModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inversion" => Ok(Self::Inversion),
            "nutation" => Ok(Self::Nutation),
            _ => Err(Error::invalid(format!("unknown model '{s}' (expected inversion or nutation)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    None,
    Peak,
    Area,
}

impl Normalization {
    pub const ALL: [Normalization; 3] = [Self::None, Self::Peak, Self::Area];
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Peak => "peak",
            Self::Area => "area",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "peak" => Ok(Self::Peak),
            "area" => Ok(Self::Area),
            _ => Err(Error::invalid(format!("unknown normalization '{s}' (expected none, peak or area)"))),
        }
    }
}

/// Weights of one component across the 20 mixture spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensitySeries {
    pub component_id: String,
    pub model: IntensityModel,
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDataset {
    pub grid: SpectrumGrid,
    /// One mixture spectrum per row.
    pub spectra: Matrix,
    pub components: Vec<IntensitySeries>,
    pub noise_factor: f64,
    pub seed: u64,
    pub normalization: Normalization,
    /// `Σ|signal| / Σ|noise|`, absent for noiseless data.
    pub signal_to_noise: Option<f64>,
}

impl MixtureDataset {
    pub fn true_k(&self) -> usize {
        self.components.len()
    }
}

/// Picks `k` distinct library entries (returned as indices) in one pass with
/// reservoir sampling.
pub fn sample_indices(library_len: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    if k > library_len {
        return Err(Error::invalid(format!(
            "cannot sample {k} components from a library of {library_len}"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut reservoir: Vec<usize> = (0..k).collect();
    for i in k..library_len {
        let j = rng.below(i + 1);
        if j < k {
            reservoir[j] = i;
        }
    }
    Ok(reservoir)
}

pub fn sample_components<'a>(library: &'a [PureComponent], k: usize, seed: u64) -> Result<Vec<&'a PureComponent>> {
    Ok(sample_indices(library.len(), k, seed)?
        .into_iter()
        .map(|i| &library[i])
        .collect())
}

/// `A·(1 − 2e^(−τ/T1))` for each delay.
pub fn inversion_profile(amplitude: f64, t1: f64, taus: &[f64]) -> Result<Vec<f64>> {
    if !(t1.is_finite() && t1 > 0.0) {
        return Err(Error::invalid("T1 must be positive"));
    }
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::invalid("amplitude must be positive"));
    }
    if taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::invalid("delays must be finite and nonnegative"));
    }
    if taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("delays must be ascending"));
    }
    Ok(taus
        .iter()
        .map(|&tau| amplitude * (1.0 - 2.0 * (-tau / t1).exp()))
        .collect())
}

/// `A·cos(2π·f·pulse)` for each pulse value.
pub fn nutation_profile(amplitude: f64, frequency: f64, pulses: &[f64]) -> Result<Vec<f64>> {
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::invalid("amplitude must be positive"));
    }
    if !(NUTATION_BASE_FREQUENCY..=NUTATION_MAX_FREQUENCY).contains(&frequency) {
        return Err(Error::invalid("nutation frequency must lie in [0.5, 0.75]"));
    }
    if pulses.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("pulse values must lie in [0, 1]"));
    }
    Ok(pulses
        .iter()
        .map(|&p| amplitude * (2.0 * std::f64::consts::PI * frequency * p).cos())
        .collect())
}

/// `τ_j = j·τ_max/20` for `j = 1..=20`, with `τ_max = RECOVERY_FACTOR·T1_max`.
pub fn inversion_taus(max_t1: f64) -> Vec<f64> {
    let tau_max = RECOVERY_FACTOR * max_t1;
    (1..=N_SPECTRA)
        .map(|j| if j == N_SPECTRA { tau_max } else { j as f64 * tau_max / N_SPECTRA as f64 })
        .collect()
}

/// 20 pulse values evenly spaced over `[0, 1]`.
pub fn nutation_pulses() -> Vec<f64> {
    (0..N_SPECTRA)
        .map(|j| j as f64 / (N_SPECTRA - 1) as f64)
        .collect()
}

fn draw_series(pures: &[&PureComponent], model: IntensityModel, rng: &mut SeededRng) -> Result<Vec<IntensitySeries>> {
    match model {
        IntensityModel::Inversion => {
            let (lo, hi) = INVERSION_AMPLITUDE_RANGE;
            let t1s: Vec<f64> = pures.iter().map(|_| rng.uniform_range(T1_RANGE.0, T1_RANGE.1)).collect();
            let mut amps: Vec<f64> = pures.iter().map(|_| rng.uniform_range(lo, hi)).collect();
            loop {
                let max = amps.iter().cloned().fold(0.0, f64::max);
                let mut ok = true;
                for a in amps.iter_mut() {
                    if *a < AMPLITUDE_FLOOR * max {
                        *a = rng.uniform_range(lo, hi);
                        ok = false;
                    }
                }
                if ok {
                    break;
                }
            }
            let taus = inversion_taus(t1s.iter().cloned().fold(0.0, f64::max));
            pures
                .iter()
                .zip(t1s.iter().zip(&amps))
                .map(|(p, (&t1, &a))| {
                    Ok(IntensitySeries {
                        component_id: p.id.clone(),
                        model,
                        amplitude: a,
                        t1: Some(t1),
                        frequency: None,
                        values: inversion_profile(a, t1, &taus)?,
                    })
                })
                .collect()
        }
        IntensityModel::Nutation => {
            let pulses = nutation_pulses();
            pures
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let f = if i == 0 {
                        NUTATION_BASE_FREQUENCY
                    } else {
                        rng.uniform_left_open(NUTATION_BASE_FREQUENCY, NUTATION_MAX_FREQUENCY)
                    };
                    let a = rng.uniform_left_open(0.0, 1.0);
                    Ok(IntensitySeries {
                        component_id: p.id.clone(),
                        model,
                        amplitude: a,
                        t1: None,
                        frequency: Some(f),
                        values: nutation_profile(a, f, &pulses)?,
                    })
                })
                .collect()
        }
    }
}

/// Builds a mixture dataset from 2 to 10 pure components.
pub fn assemble_dataset(pures: &[&PureComponent], model: IntensityModel, seed: u64, noise_factor: f64) -> Result<MixtureDataset> {
    if !(MIN_COMPONENTS..=MAX_COMPONENTS).contains(&pures.len()) {
        return Err(Error::invalid(format!(
            "a mixture needs {MIN_COMPONENTS} to {MAX_COMPONENTS} components, got {}",
            pures.len()
        )));
    }
    mix(pures, model, seed, noise_factor)
}

/// Same as [`assemble_dataset`] without the component-count bounds; any
/// nonzero number of components is accepted.
pub fn mix(pures: &[&PureComponent], model: IntensityModel, seed: u64, noise_factor: f64) -> Result<MixtureDataset> {
    if pures.is_empty() {
        return Err(Error::invalid("a mixture needs at least one component"));
    }
    if !(noise_factor.is_finite() && noise_factor >= 0.0) {
        return Err(Error::invalid("noise_factor must be finite and nonnegative"));
    }
    let grid = pures[0].grid;
    if pures.iter().any(|p| p.grid != grid || p.intensity.len() != grid.n_points) {
        return Err(Error::invalid("pure components are on different grids"));
    }
    let mut rng = SeededRng::new(seed);
    let series = draw_series(pures, model, &mut rng)?;
    let n = grid.n_points;
    let mut spectra = Matrix::zeros(N_SPECTRA, n);
    for (pure, s) in pures.iter().zip(&series) {
        for (j, &w) in s.values.iter().enumerate() {
            for (c, &v) in pure.intensity.iter().enumerate() {
                spectra[(j, c)] += w * v;
            }
        }
    }
    let mut signal_to_noise = None;
    if noise_factor > 0.0 {
        let signal: f64 = spectra.iter().map(|v| v.abs()).sum();
        let mut noise_sum = 0.0;
        for j in 0..N_SPECTRA {
            for c in 0..n {
                let e = noise_factor * rng.gaussian();
                noise_sum += e.abs();
                spectra[(j, c)] += e;
            }
        }
        signal_to_noise = Some(signal / noise_sum);
    }
    Ok(MixtureDataset {
        grid,
        spectra,
        components: series,
        noise_factor,
        seed,
        normalization: Normalization::None,
        signal_to_noise,
    })
}

/// Rescales each spectrum to unit peak magnitude or unit absolute area.
pub fn normalize(dataset: &MixtureDataset, mode: Normalization) -> Result<MixtureDataset> {
    let mut out = dataset.clone();
    out.normalization = mode;
    if mode == Normalization::None {
        return Ok(out);
    }
    normalize_rows(&mut out.spectra, mode)?;
    Ok(out)
}

pub fn normalize_rows(spectra: &mut Matrix, mode: Normalization) -> Result<()> {
    for j in 0..spectra.nrows() {
        let mut row = spectra.row_mut(j);
        let denom = match mode {
            Normalization::None => return Ok(()),
            Normalization::Peak => row.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
            Normalization::Area => row.iter().map(|v| v.abs()).sum(),
        };
        if denom == 0.0 {
            return Err(Error::DegenerateRow(j));
        }
        row /= denom;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lineshape::{simulate_pure, QuadrupolarParams};
    use crate::numkernel::svd;

    fn pure(cq: f64, delta: f64, gb: f64) -> PureComponent {
        let p = QuadrupolarParams {
            cq_hz: cq,
            eta: 0.3,
            delta_iso_hz: delta,
            spin: 1.5,
            spin_rate_hz: 10_000.0,
            gaussian_broaden: gb,
        };
        simulate_pure(&p, &SpectrumGrid::standard()).unwrap()
    }

    fn library(n: usize) -> Vec<PureComponent> {
        (0..n)
            .map(|i| pure(5e5 * i as f64, -3000.0 + 600.0 * i as f64, 8.0 + i as f64))
            .collect()
    }

    #[test]
    fn inversion_analytics() {
        let t1 = 1.3;
        let v = inversion_profile(2.0, t1, &[0.0, t1 * 2f64.ln(), RECOVERY_FACTOR * t1]).unwrap();
        assert!((v[0] + 2.0).abs() < 1e-15);
        assert!(v[1].abs() < 1e-12 * 2.0);
        assert!((v[2] - 0.985 * 2.0).abs() < 1e-4 * 2.0);
        assert!(inversion_profile(1.0, 0.0, &[1.0]).is_err());
        assert!(inversion_profile(1.0, -1.0, &[1.0]).is_err());
    }

    #[test]
    fn nutation_analytics() {
        let a = 0.7;
        assert_eq!(nutation_profile(a, 0.6, &[0.0]).unwrap()[0], a);
        assert!((nutation_profile(a, 0.5, &[1.0]).unwrap()[0] + a).abs() < 1e-15);
        assert!(nutation_profile(a, 0.5, &[0.5]).unwrap()[0].abs() < 1e-12 * a);
        assert!(nutation_profile(a, 0.5, &[1.5]).is_err());
        assert!(nutation_profile(a, 0.5, &[-0.1]).is_err());
    }

    #[test]
    fn reservoir_exhaustive_and_deterministic() {
        let mut all = sample_indices(10, 10, 3).unwrap();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(sample_indices(1000, 7, 42).unwrap(), sample_indices(1000, 7, 42).unwrap());
        assert!(sample_indices(5, 6, 1).is_err());
    }

    #[test]
    fn reservoir_is_uniform() {
        let mut counts = [0usize; 10];
        let trials = 100_000;
        for seed in 0..trials {
            counts[sample_indices(10, 1, seed as u64).unwrap()[0]] += 1;
        }
        for c in counts {
            let freq = c as f64 / trials as f64;
            assert!((freq - 0.1).abs() < 0.005, "{freq}");
        }
    }

    #[test]
    fn single_source_is_rank_one() {
        let lib = library(1);
        let d = mix(&[&lib[0]], IntensityModel::Inversion, 5, 0.0).unwrap();
        let w = &d.components[0].values;
        for (j, &wj) in w.iter().enumerate() {
            for (c, &p) in lib[0].intensity.iter().enumerate() {
                if p > 1e-6 {
                    assert!((d.spectra[(j, c)] / p - wj).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn noise_ladder_accepted() {
        let lib = library(3);
        let refs: Vec<&PureComponent> = lib.iter().collect();
        for noise in NOISE_LADDER {
            let d = assemble_dataset(&refs, IntensityModel::Nutation, 9, noise).unwrap();
            assert_eq!(d.noise_factor, noise);
            assert_eq!(d.signal_to_noise.is_some(), noise > 0.0);
        }
    }

    #[test]
    fn noiseless_rank_equals_component_count() {
        let lib = library(6);
        for k in [2usize, 4, 6] {
            let refs: Vec<&PureComponent> = lib.iter().take(k).collect();
            for model in [IntensityModel::Inversion, IntensityModel::Nutation] {
                let d = assemble_dataset(&refs, model, 11, 0.0).unwrap();
                let s = svd(&d.spectra).unwrap().s;
                assert!(s[k - 1] > 1e-10 * s[0]);
                assert!(s[k..].iter().all(|&v| v < 1e-10 * s[0]), "{model} k={k}: {:?}", &s[..k + 1]);
            }
        }
    }

    #[test]
    fn additivity_and_inversion_rules() {
        let lib = library(5);
        let refs: Vec<&PureComponent> = lib.iter().collect();
        for seed in 0..20 {
            let d = assemble_dataset(&refs, IntensityModel::Inversion, seed, 0.0).unwrap();
            let w = Matrix::from_fn(N_SPECTRA, refs.len(), |j, i| d.components[i].values[j]);
            let p = Matrix::from_fn(refs.len(), 1024, |i, c| refs[i].intensity[c]);
            let diff = (&w * &p - &d.spectra).amax();
            assert!(diff < 1e-12);
            let amps: Vec<f64> = d.components.iter().map(|s| s.amplitude).collect();
            let max = amps.iter().cloned().fold(0.0, f64::max);
            assert!(amps.iter().all(|&a| a >= AMPLITUDE_FLOOR * max));
            for s in &d.components {
                assert!(s.values.windows(2).all(|w| w[1] > w[0]));
                let crossings = s.values.windows(2).filter(|w| w[0] < 0.0 && w[1] >= 0.0).count();
                assert!(crossings == 1 || s.values[0] >= 0.0);
                assert!(*s.values.last().unwrap() >= 0.985 * s.amplitude - 1e-12);
                let t1 = s.t1.unwrap();
                assert!((T1_RANGE.0..=T1_RANGE.1).contains(&t1));
            }
        }
    }

    #[test]
    fn nutation_frequencies() {
        let lib = library(4);
        let refs: Vec<&PureComponent> = lib.iter().collect();
        let d = assemble_dataset(&refs, IntensityModel::Nutation, 2, 0.0).unwrap();
        assert_eq!(d.components[0].frequency, Some(0.5));
        for s in &d.components[1..] {
            let f = s.frequency.unwrap();
            assert!(f > 0.5 && f <= 0.75);
        }
    }

    #[test]
    fn component_bounds() {
        let lib = library(11);
        let refs: Vec<&PureComponent> = lib.iter().collect();
        assert!(assemble_dataset(&refs[..1], IntensityModel::Inversion, 0, 0.0).is_err());
        assert!(assemble_dataset(&refs, IntensityModel::Inversion, 0, 0.0).is_err());
        assert!(assemble_dataset(&refs[..10], IntensityModel::Inversion, 0, 0.0).is_ok());
    }

    #[test]
    fn reproducible() {
        let lib = library(4);
        let refs: Vec<&PureComponent> = lib.iter().collect();
        let a = assemble_dataset(&refs, IntensityModel::Inversion, 77, 0.001).unwrap();
        let b = assemble_dataset(&refs, IntensityModel::Inversion, 77, 0.001).unwrap();
        assert_eq!(a, b);
        let c = assemble_dataset(&refs, IntensityModel::Inversion, 78, 0.001).unwrap();
        assert_ne!(a.spectra, c.spectra);
    }

    #[test]
    fn normalizations() {
        let lib = library(3);
        let refs: Vec<&PureComponent> = lib.iter().collect();
        let d = assemble_dataset(&refs, IntensityModel::Nutation, 4, 0.0001).unwrap();
        let same = normalize(&d, Normalization::None).unwrap();
        assert_eq!(same.spectra, d.spectra);
        let peak = normalize(&d, Normalization::Peak).unwrap();
        for row in peak.spectra.row_iter() {
            assert!((row.amax() - 1.0).abs() < 1e-12);
        }
        let area = normalize(&d, Normalization::Area).unwrap();
        for (j, row) in area.spectra.row_iter().enumerate() {
            assert!((row.iter().map(|v| v.abs()).sum::<f64>() - 1.0).abs() < 1e-12);
            let ratio = d.spectra[(j, 100)] / row[100];
            for c in (0..1024).step_by(97) {
                assert!((row[c] * ratio - d.spectra[(j, c)]).abs() < 1e-12 * d.spectra.row(j).amax());
            }
        }
    }

    #[test]
    fn zero_row_is_degenerate() {
        let mut m = Matrix::from_element(3, 4, 1.0);
        m.row_mut(1).fill(0.0);
        assert_eq!(normalize_rows(&mut m.clone(), Normalization::Peak), Err(Error::DegenerateRow(1)));
        assert_eq!(normalize_rows(&mut m, Normalization::Area), Err(Error::DegenerateRow(1)));
    }
}
