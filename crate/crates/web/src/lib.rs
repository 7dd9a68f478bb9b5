//! Browser bindings: preview a lineshape, mix a dataset from a small
//! built-in library, then separate it and see how well each technique
//! recovers the pure spectra. Results cross the boundary as JSON strings.

use serde_json::json;
use unmix_core::bss::{decompose, TechniqueId};
use unmix_core::lineshape::{generate_library, simulate_pure, LibraryGridSpec, PureComponent, QuadrupolarParams, SpectrumGrid};
use unmix_core::numkernel::derive_seed;
use unmix_core::scoring::{fit_pair, match_components};
use unmix_core::synth::{assemble_dataset, normalize, sample_components, IntensityModel, MixtureDataset, Normalization};
use unmix_core::Matrix;
use wasm_bindgen::prelude::*;

const N_POINTS: usize = 512;

fn grid() -> SpectrumGrid {
    SpectrumGrid { n_points: N_POINTS, ..SpectrumGrid::standard() }
}

/// 6 C_Q × 3 η × 4 δ_iso × 4 smoothing values: 288 components, small
/// enough to simulate on page load.
fn demo_spec() -> LibraryGridSpec {
    LibraryGridSpec {
        cq_steps: 6,
        eta_steps: 3,
        delta_steps: 4,
        smoothing_exponents: vec![4, 5, 6, 7],
        ..LibraryGridSpec::standard()
    }
}

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[wasm_bindgen]
pub struct Workbench {
    library: Vec<PureComponent>,
    seed: u64,
    draws: u64,
    current: Option<(Vec<usize>, MixtureDataset)>,
}

#[wasm_bindgen]
impl Workbench {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64) -> Result<Workbench, JsError> {
        let library = generate_library(&demo_spec(), &grid()).map_err(js_err)?;
        Ok(Workbench { library, seed, draws: 0, current: None })
    }

    #[wasm_bindgen(js_name = librarySize)]
    pub fn library_size(&self) -> usize {
        self.library.len()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        grid().frequencies()
    }

    /// Technique identifiers, comma separated.
    pub fn techniques() -> String {
        TechniqueId::all().iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
    }

    /// One simulated central-transition MAS lineshape.
    pub fn preview(&self, cq_hz: f64, eta: f64, delta_iso_hz: f64, smoothing: f64) -> Result<Vec<f64>, JsError> {
        let params = QuadrupolarParams {
            cq_hz,
            eta,
            delta_iso_hz,
            spin: 1.5,
            spin_rate_hz: 10_000.0,
            gaussian_broaden: smoothing,
        };
        Ok(simulate_pure(&params, &grid()).map_err(js_err)?.intensity)
    }

    /// Draws a new dataset of `k` library components and returns its
    /// spectra and pure-component ids.
    pub fn mix(&mut self, k: usize, model: &str, noise: f64) -> Result<String, JsError> {
        let model: IntensityModel = model.parse().map_err(js_err)?;
        let draw = self.draws;
        self.draws += 1;
        let pures = sample_components(&self.library, k, derive_seed(self.seed, &[draw, 1])).map_err(js_err)?;
        let dataset = assemble_dataset(&pures, model, derive_seed(self.seed, &[draw, 2]), noise).map_err(js_err)?;
        let ids: Vec<&str> = pures.iter().map(|p| p.id.as_str()).collect();
        let indices = pures
            .iter()
            .map(|p| self.library.iter().position(|c| c.id == p.id).expect("drawn from library"))
            .collect();
        let out = json!({ "ids": ids, "spectra": rows(&dataset.spectra) });
        self.current = Some((indices, dataset));
        Ok(out.to_string())
    }

    /// Separates the current dataset and matches the result to its pure
    /// components. Each matched prediction is returned mapped onto its
    /// pure spectrum's scale for overlay.
    pub fn separate(&self, technique: &str, k: usize, normalization: &str, seed: u64) -> Result<String, JsError> {
        let (indices, dataset) = self.current.as_ref().ok_or_else(|| JsError::new("mix a dataset first"))?;
        let technique: TechniqueId = technique.parse().map_err(js_err)?;
        let normalization: Normalization = normalization.parse().map_err(js_err)?;
        let prepared = normalize(dataset, normalization).map_err(js_err)?;
        let set = decompose(&prepared, technique, k, seed).map_err(js_err)?;
        let pures = Matrix::from_fn(indices.len(), N_POINTS, |i, c| self.library[indices[i]].intensity[c]);
        let report = match_components(&set.components, &pures).map_err(js_err)?;
        let pairs: Vec<_> = report
            .pairs
            .iter()
            .map(|p| {
                let pure: Vec<f64> = pures.row(p.pure).iter().copied().collect();
                let pred: Vec<f64> = set.components.row(p.predicted).iter().copied().collect();
                let mapped: Vec<f64> = match fit_pair(&pure, &pred) {
                    Ok(f) => pred.iter().map(|v| f.b + f.m * v).collect(),
                    Err(_) => pred,
                };
                json!({
                    "predicted": p.predicted,
                    "pure": p.pure,
                    "id": self.library[indices[p.pure]].id,
                    "lack_of_fit": p.lack_of_fit,
                    "normalized_lack_of_fit": p.normalized_lack_of_fit,
                    "pure_spectrum": pure,
                    "mapped_prediction": mapped,
                })
            })
            .collect();
        Ok(json!({
            "technique": technique.to_string(),
            "converged": set.converged,
            "dataset_error": report.dataset_error,
            "discarded": report.discarded_predicted,
            "unmatched": report.unmatched_pure,
            "pairs": pairs,
        })
        .to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_then_separate() {
        let mut w = Workbench::new(3).unwrap();
        assert_eq!(w.library_size(), 288);
        let mixed: serde_json::Value = serde_json::from_str(&w.mix(3, "nutation", 1e-4).unwrap()).unwrap();
        assert_eq!(mixed["spectra"].as_array().unwrap().len(), 20);
        let out: serde_json::Value =
            serde_json::from_str(&w.separate("simplisma:offset0", 4, "none", 0).unwrap()).unwrap();
        assert_eq!(out["pairs"].as_array().unwrap().len(), 3);
        assert_eq!(out["discarded"].as_array().unwrap().len(), 1);
        assert!(out["dataset_error"].as_f64().unwrap() < 1e-3);
    }

    #[test]
    fn preview_has_grid_length() {
        let w = Workbench::new(0).unwrap();
        let s = w.preview(2e6, 0.3, 0.0, 32.0).unwrap();
        assert_eq!(s.len(), N_POINTS);
        assert!(s.iter().sum::<f64>() > 0.0);
        assert!(Workbench::techniques().contains("mcr:nnls"));
    }
}
