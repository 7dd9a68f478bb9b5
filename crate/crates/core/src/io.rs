//! On-disk formats.
//!
//! Every file is a JSON object carrying `format_version` and `kind`. Spectra
//! are stored as base64 strings of little-endian `f64`, which round-trip bit
//! for bit; readers also accept plain JSON number arrays so hand-made or
//! externally converted data can be loaded. A CSV export with 17
//! significant digits is available for inspection.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::bss::{ComponentSet, TechniqueId};
use crate::error::{Error, Result};
use crate::lineshape::{LibraryGridSpec, PureComponent, QuadrupolarParams, SpectrumGrid};
use crate::numkernel::Matrix;
use crate::scoring::MatchReport;
use crate::synth::{IntensitySeries, IntensityModel, MixtureDataset, Normalization};

pub const FORMAT_VERSION: u32 = 1;

pub fn encode_f64(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    STANDARD.encode(bytes)
}

pub fn decode_f64(text: &str) -> Result<Vec<f64>> {
    let bytes = STANDARD
        .decode(text.trim())
        .map_err(|e| Error::Format(format!("bad base64 spectrum: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format(format!(
            "base64 spectrum holds {} bytes, not a whole number of f64 values",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// A vector of floats that serializes as base64 and deserializes from
/// either base64 or a plain number array.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum(pub Vec<f64>);

impl Serialize for Spectrum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&encode_f64(&self.0))
    }
}

impl<'de> Deserialize<'de> for Spectrum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Encoded(String),
            Plain(Vec<f64>),
        }
        match Raw::deserialize(d)? {
            Raw::Encoded(s) => decode_f64(&s).map(Spectrum).map_err(serde::de::Error::custom),
            Raw::Plain(v) => Ok(Spectrum(v)),
        }
    }
}

fn rows_of(m: &Matrix) -> Vec<Spectrum> {
    m.row_iter().map(|r| Spectrum(r.iter().copied().collect())).collect()
}

fn matrix_of(rows: &[Spectrum], ncols: usize, what: &str) -> Result<Matrix> {
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.0.len() != ncols) {
        return Err(Error::Format(format!("{what} row {i} has {} values, expected {ncols}", r.0.len())));
    }
    Ok(Matrix::from_fn(rows.len(), ncols, |i, c| rows[i].0[c]))
}

fn check_header(version: u32, kind: &str, expected: &str) -> Result<()> {
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format_version {version} (this build reads {FORMAT_VERSION})"
        )));
    }
    if kind != expected {
        return Err(Error::Format(format!("expected a {expected} file, found kind \"{kind}\"")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryManifest {
    pub grid_spec: LibraryGridSpec,
    pub grid: SpectrumGrid,
    /// Version of the generator that wrote the file.
    pub generator_version: String,
    pub n_components: usize,
    /// Hex sha256 over the grid and every component record.
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub id: String,
    pub params: QuadrupolarParams,
    pub intensity: Spectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryFile {
    pub format_version: u32,
    pub kind: String,
    pub manifest: LibraryManifest,
    pub components: Vec<ComponentRecord>,
}

fn hash_params(h: &mut Sha256, p: &QuadrupolarParams) {
    for v in [p.cq_hz, p.eta, p.delta_iso_hz, p.spin, p.spin_rate_hz, p.gaussian_broaden] {
        h.update(v.to_le_bytes());
    }
}

/// Order-sensitive digest of a library's grid and components.
pub fn library_checksum(grid: &SpectrumGrid, components: &[PureComponent]) -> String {
    let mut h = Sha256::new();
    h.update((grid.n_points as u64).to_le_bytes());
    for v in [grid.sweep_width_hz, grid.larmor_hz, grid.center_hz] {
        h.update(v.to_le_bytes());
    }
    for c in components {
        h.update((c.id.len() as u64).to_le_bytes());
        h.update(c.id.as_bytes());
        hash_params(&mut h, &c.params);
        for v in &c.intensity {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

impl LibraryFile {
    pub fn new(spec: &LibraryGridSpec, grid: &SpectrumGrid, components: &[PureComponent]) -> Result<Self> {
        if let Some(c) = components.iter().find(|c| c.grid != *grid || c.intensity.len() != grid.n_points) {
            return Err(Error::invalid(format!("component {} is not on the library grid", c.id)));
        }
        Ok(Self {
            format_version: FORMAT_VERSION,
            kind: "library".into(),
            manifest: LibraryManifest {
                grid_spec: spec.clone(),
                grid: *grid,
                generator_version: env!("CARGO_PKG_VERSION").into(),
                n_components: components.len(),
                checksum: library_checksum(grid, components),
            },
            components: components
                .iter()
                .map(|c| ComponentRecord {
                    id: c.id.clone(),
                    params: c.params,
                    intensity: Spectrum(c.intensity.clone()),
                })
                .collect(),
        })
    }

    /// Validates the header, lengths and checksum, and rebuilds the
    /// components.
    pub fn into_components(self) -> Result<Vec<PureComponent>> {
        check_header(self.format_version, &self.kind, "library")?;
        let grid = self.manifest.grid;
        grid.validate()?;
        if self.components.len() != self.manifest.n_components {
            return Err(Error::Format(format!(
                "manifest lists {} components but the file holds {}",
                self.manifest.n_components,
                self.components.len()
            )));
        }
        let mut out = Vec::with_capacity(self.components.len());
        for rec in self.components {
            if rec.intensity.0.len() != grid.n_points {
                return Err(Error::Format(format!(
                    "component {} has {} points, grid has {}",
                    rec.id,
                    rec.intensity.0.len(),
                    grid.n_points
                )));
            }
            out.push(PureComponent {
                id: rec.id,
                params: rec.params,
                grid,
                intensity: rec.intensity.0,
            });
        }
        let sum = library_checksum(&grid, &out);
        if sum != self.manifest.checksum {
            return Err(Error::Format(format!(
                "library checksum mismatch: manifest {} vs contents {sum}",
                self.manifest.checksum
            )));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub model: IntensityModel,
    pub noise_factor: f64,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_to_noise: Option<f64>,
    /// One entry per mixed component, carrying its id and weights.
    pub components: Vec<IntensitySeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub format_version: u32,
    pub kind: String,
    pub grid: SpectrumGrid,
    pub spectra: Vec<Spectrum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl DatasetFile {
    pub fn from_dataset(d: &MixtureDataset) -> Self {
        let model = d.components.first().map(|c| c.model).unwrap_or(IntensityModel::Inversion);
        Self {
            format_version: FORMAT_VERSION,
            kind: "dataset".into(),
            grid: d.grid,
            spectra: rows_of(&d.spectra),
            provenance: Some(Provenance {
                seed: d.seed,
                model,
                noise_factor: d.noise_factor,
                normalization: d.normalization,
                signal_to_noise: d.signal_to_noise,
                components: d.components.clone(),
            }),
        }
    }

    /// Builds a dataset from raw spectra with no provenance.
    pub fn from_spectra(grid: SpectrumGrid, spectra: &Matrix) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind: "dataset".into(),
            grid,
            spectra: rows_of(spectra),
            provenance: None,
        }
    }

    /// Checks the header and row lengths. Datasets without provenance come
    /// back with no components, seed 0 and zero noise.
    pub fn into_dataset(self) -> Result<MixtureDataset> {
        check_header(self.format_version, &self.kind, "dataset")?;
        self.grid.validate()?;
        if self.spectra.is_empty() {
            return Err(Error::Format("dataset holds no spectra".into()));
        }
        let spectra = matrix_of(&self.spectra, self.grid.n_points, "spectrum")?;
        crate::numkernel::check_finite(&spectra, "spectra")?;
        let p = self.provenance;
        Ok(MixtureDataset {
            grid: self.grid,
            spectra,
            components: p.as_ref().map(|p| p.components.clone()).unwrap_or_default(),
            noise_factor: p.as_ref().map_or(0.0, |p| p.noise_factor),
            seed: p.as_ref().map_or(0, |p| p.seed),
            normalization: p.as_ref().map_or(Normalization::None, |p| p.normalization),
            signal_to_noise: p.as_ref().and_then(|p| p.signal_to_noise),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSetFile {
    pub format_version: u32,
    pub kind: String,
    pub technique: TechniqueId,
    pub k_requested: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<SpectrumGrid>,
    /// `k × n_points`.
    pub components: Vec<Spectrum>,
    /// One row per mixture spectrum, `k` weights each.
    pub coefficients: Vec<Spectrum>,
    pub converged: bool,
    pub runtime_seconds: f64,
    pub metadata: BTreeMap<String, Value>,
}

impl ComponentSetFile {
    pub fn new(set: &ComponentSet, grid: Option<SpectrumGrid>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind: "components".into(),
            technique: set.technique,
            k_requested: set.k_requested,
            grid,
            components: rows_of(&set.components),
            coefficients: rows_of(&set.coefficients),
            converged: set.converged,
            runtime_seconds: set.runtime_seconds,
            metadata: set.metadata.clone(),
        }
    }

    pub fn into_component_set(self) -> Result<ComponentSet> {
        check_header(self.format_version, &self.kind, "components")?;
        let n = match (self.grid, self.components.first()) {
            (Some(g), _) => g.n_points,
            (None, Some(r)) => r.0.len(),
            (None, None) => 0,
        };
        let components = matrix_of(&self.components, n, "component")?;
        let k = components.nrows();
        let coefficients = matrix_of(&self.coefficients, k, "coefficient")?;
        Ok(ComponentSet {
            technique: self.technique,
            k_requested: self.k_requested,
            components,
            coefficients,
            converged: self.converged,
            runtime_seconds: self.runtime_seconds,
            metadata: self.metadata,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format_version: u32,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub technique: Option<TechniqueId>,
    pub pure_ids: Vec<String>,
    pub report: MatchReport,
}

impl ReportFile {
    pub fn new(report: MatchReport, technique: Option<TechniqueId>, pure_ids: Vec<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind: "match_report".into(),
            technique,
            pure_ids,
            report,
        }
    }

    pub fn check(&self) -> Result<()> {
        check_header(self.format_version, &self.kind, "match_report")
    }
}

/// Reads only `format_version` and `kind`, to tell file types apart.
pub fn peek_kind(text: &str) -> Result<String> {
    #[derive(Deserialize)]
    struct Header {
        format_version: u32,
        kind: String,
    }
    let h: Header = serde_json::from_str(text)?;
    if h.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format_version {}", h.format_version)));
    }
    Ok(h.kind)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Writes through a sibling temporary file and a rename, so readers never see
/// a half-written file.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::Io(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// CSV with a `frequency_hz` column followed by one column per spectrum.
pub fn write_spectra_csv<W: Write>(out: &mut W, grid: &SpectrumGrid, spectra: &Matrix) -> Result<()> {
    if spectra.ncols() != grid.n_points {
        return Err(Error::invalid("spectra do not match the grid"));
    }
    write!(out, "frequency_hz")?;
    for j in 0..spectra.nrows() {
        write!(out, ",spectrum_{j}")?;
    }
    writeln!(out)?;
    for c in 0..spectra.ncols() {
        write!(out, "{:.16e}", grid.frequency(c))?;
        for j in 0..spectra.nrows() {
            write!(out, ",{:.16e}", spectra[(j, c)])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads the spectra back from [`write_spectra_csv`] output.
pub fn read_spectra_csv<R: BufRead>(input: R) -> Result<Matrix> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty csv".into()))??;
    let n_spectra = header.split(',').count().saturating_sub(1);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_spectra + 1 {
            return Err(Error::Format(format!("csv line {} has {} fields", i + 2, fields.len())));
        }
        let row = fields[1..]
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Format(format!("csv line {}: {e}", i + 2))))
            .collect::<Result<Vec<f64>>>()?;
        cols.push(row);
    }
    Ok(Matrix::from_fn(n_spectra, cols.len(), |j, c| cols[c][j]))
}
