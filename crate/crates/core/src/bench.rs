//! Benchmark orchestration and table aggregation.
//!
//! A plan is the cross product of intensity models, noise levels, component
//! count modes and dataset indices (the datasets), times normalizations,
//! techniques and component-count offsets (the runs on each dataset). Every
//! dataset is derived only from the master seed and its own coordinates, so
//! the same datasets are seen by every technique and results do not depend
//! on execution order or worker count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bss::{decompose, TechniqueId};
use crate::error::{Error, Result};
use crate::lineshape::PureComponent;
use crate::numkernel::{derive_seed, SeededRng};
use crate::scoring::{best_assignment, dataset_error, MatchReport};
use crate::synth::{
    assemble_dataset, normalize, sample_components, IntensityModel, MixtureDataset, Normalization, NOISE_LADDER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentMode {
    Fixed4,
    Fixed6,
    Random2to10,
}

impl ComponentMode {
    pub const ALL: [ComponentMode; 3] = [Self::Fixed4, Self::Fixed6, Self::Random2to10];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fixed4 => "fixed4",
            Self::Fixed6 => "fixed6",
            Self::Random2to10 => "random2to10",
        }
    }

    fn code(&self) -> u64 {
        match self {
            Self::Fixed4 => 0,
            Self::Fixed6 => 1,
            Self::Random2to10 => 2,
        }
    }

    /// Number of pure components for a dataset drawn with `seed`.
    pub fn draw(&self, seed: u64) -> usize {
        match self {
            Self::Fixed4 => 4,
            Self::Fixed6 => 6,
            Self::Random2to10 => 2 + SeededRng::new(seed).below(9),
        }
    }
}

impl fmt::Display for ComponentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ComponentMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown component mode \"{s}\" (fixed4, fixed6, random2to10)")))
    }
}

fn model_code(m: IntensityModel) -> u64 {
    match m {
        IntensityModel::Inversion => 0,
        IntensityModel::Nutation => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkPlan {
    pub master_seed: u64,
    pub n_datasets_per_cell: usize,
    pub component_modes: Vec<ComponentMode>,
    pub models: Vec<IntensityModel>,
    pub noise_levels: Vec<f64>,
    pub normalizations: Vec<Normalization>,
    pub techniques: Vec<TechniqueId>,
    pub k_offsets: Vec<i32>,
}

impl BenchmarkPlan {
    /// Full-scale grid: 2 models × 6 noise levels × 3 modes × 20 datasets
    /// = 720 datasets, every technique, normalization and offset.
    pub fn full(master_seed: u64) -> Self {
        Self {
            master_seed,
            n_datasets_per_cell: 20,
            component_modes: ComponentMode::ALL.to_vec(),
            models: vec![IntensityModel::Inversion, IntensityModel::Nutation],
            noise_levels: NOISE_LADDER.to_vec(),
            normalizations: Normalization::ALL.to_vec(),
            techniques: TechniqueId::all(),
            k_offsets: vec![-2, -1, 0, 1, 2, 3, 4],
        }
    }

    /// Desk-scale grid: four-component datasets of both models at three
    /// noise levels, 10 per cell (60 datasets), every technique and
    /// normalization, offsets 0, +1 and +4.
    pub fn desk(master_seed: u64) -> Self {
        Self {
            master_seed,
            n_datasets_per_cell: 10,
            component_modes: vec![ComponentMode::Fixed4],
            models: vec![IntensityModel::Inversion, IntensityModel::Nutation],
            noise_levels: vec![1e-4, 3.16e-4, 1e-3],
            normalizations: Normalization::ALL.to_vec(),
            techniques: TechniqueId::all(),
            k_offsets: vec![0, 1, 4],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("component_modes", self.component_modes.is_empty()),
            ("models", self.models.is_empty()),
            ("noise_levels", self.noise_levels.is_empty()),
            ("normalizations", self.normalizations.is_empty()),
            ("techniques", self.techniques.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::invalid(format!("plan field {name} is empty")));
        }
        if self.n_datasets_per_cell == 0 {
            return Err(Error::invalid("plan field n_datasets_per_cell must be at least 1"));
        }
        if !self.k_offsets.contains(&0) {
            return Err(Error::invalid("plan field k_offsets must contain 0"));
        }
        if let Some(bad) = self.noise_levels.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(format!("plan field noise_levels has invalid entry {bad}")));
        }
        Ok(())
    }

    pub fn datasets(&self) -> Vec<DatasetKey> {
        let mut out = Vec::new();
        for &model in &self.models {
            for &noise_factor in &self.noise_levels {
                for &mode in &self.component_modes {
                    for index in 0..self.n_datasets_per_cell {
                        out.push(DatasetKey {
                            model,
                            noise_factor,
                            mode,
                            index,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn runs_per_dataset(&self) -> usize {
        self.normalizations.len() * self.techniques.len() * self.k_offsets.len()
    }

    pub fn total_runs(&self) -> usize {
        self.datasets().len() * self.runs_per_dataset()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetKey {
    pub model: IntensityModel,
    pub noise_factor: f64,
    pub mode: ComponentMode,
    pub index: usize,
}

impl DatasetKey {
    /// Seed for component sampling and the component count. Independent of
    /// the noise level, so one noise ladder shares its pure components and
    /// weights.
    pub fn sampling_seed(&self, master: u64) -> u64 {
        derive_seed(master, &[1, model_code(self.model), self.mode.code(), self.index as u64])
    }

    pub fn mixing_seed(&self, master: u64) -> u64 {
        derive_seed(master, &[2, model_code(self.model), self.mode.code(), self.index as u64])
    }

    pub fn technique_seed(&self, master: u64) -> u64 {
        derive_seed(
            master,
            &[3, model_code(self.model), self.mode.code(), self.index as u64, self.noise_factor.to_bits()],
        )
    }
}

/// Identifies one decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunKey {
    pub model: IntensityModel,
    pub noise_factor: f64,
    pub mode: ComponentMode,
    pub normalization: Normalization,
    pub technique: TechniqueId,
    pub k_offset: i32,
    pub dataset_index: usize,
}

type SortKey = (IntensityModel, u64, ComponentMode, Normalization, TechniqueId, i32, usize);

impl RunKey {
    fn sort_key(&self) -> SortKey {
        (
            self.model,
            ordered_bits(self.noise_factor),
            self.mode,
            self.normalization,
            self.technique,
            self.k_offset,
            self.dataset_index,
        )
    }

    pub fn cell(&self) -> CellKey {
        CellKey {
            model: self.model,
            noise_factor: self.noise_factor,
            normalization: self.normalization,
            mode: self.mode,
            technique: self.technique,
            k_offset: self.k_offset,
        }
    }
}

impl Eq for RunKey {}
impl PartialOrd for RunKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for RunKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

/// Monotone map from nonnegative floats to integers.
fn ordered_bits(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

/// One line of the incremental results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub key: RunKey,
    pub true_k: usize,
    pub k: usize,
    /// `true_k + k_offset` was below 1 and was raised to 1.
    pub k_clamped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub runtime_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<MatchReport>,
}

/// Runs every (normalization, technique, offset) combination of `plan` on
/// one dataset, skipping keys for which `skip` returns true. Dataset
/// synthesis failures become failed records, never panics.
pub fn run_dataset(
    plan: &BenchmarkPlan,
    library: &[PureComponent],
    key: &DatasetKey,
    skip: &dyn Fn(&RunKey) -> bool,
    sink: &mut dyn FnMut(RunRecord),
) {
    let true_k = key.mode.draw(key.sampling_seed(plan.master_seed));
    let seed = key.technique_seed(plan.master_seed);
    for &normalization in &plan.normalizations {
        let prepared = build_dataset(plan, library, key, normalization);
        for &technique in &plan.techniques {
            for &k_offset in &plan.k_offsets {
                let run_key = RunKey {
                    model: key.model,
                    noise_factor: key.noise_factor,
                    mode: key.mode,
                    normalization,
                    technique,
                    k_offset,
                    dataset_index: key.index,
                };
                if skip(&run_key) {
                    continue;
                }
                let wanted = true_k as i64 + k_offset as i64;
                let k = wanted.max(1) as usize;
                let mut record = RunRecord {
                    key: run_key,
                    true_k,
                    k,
                    k_clamped: wanted < 1,
                    error: None,
                    failure: None,
                    runtime_seconds: 0.0,
                    report: None,
                };
                let outcome = prepared.as_ref().map_err(Clone::clone).and_then(|(pures, data)| {
                    let set = decompose(data, technique, k, seed)?;
                    record.runtime_seconds = set.runtime_seconds;
                    let report = best_assignment(&set, pures)?;
                    let err = dataset_error(&report, data.grid.n_points)?;
                    if !err.is_finite() {
                        return Err(Error::NumericalFailure("non-finite dataset error".into()));
                    }
                    Ok((err, report))
                });
                match outcome {
                    Ok((err, report)) => {
                        record.error = Some(err);
                        record.report = Some(report);
                    }
                    Err(e) => record.failure = Some(e.to_string()),
                }
                sink(record);
            }
        }
    }
}


/// Synthesizes one plan dataset and applies `normalization`. Returns the
/// pure components it was mixed from alongside it.
pub fn build_dataset<'a>(
    plan: &BenchmarkPlan,
    library: &'a [PureComponent],
    key: &DatasetKey,
    normalization: Normalization,
) -> Result<(Vec<&'a PureComponent>, MixtureDataset)> {
    let true_k = key.mode.draw(key.sampling_seed(plan.master_seed));
    let pures = sample_components(library, true_k, derive_seed(key.sampling_seed(plan.master_seed), &[1]))?;
    let data = assemble_dataset(&pures, key.model, key.mixing_seed(plan.master_seed), key.noise_factor)?;
    Ok((pures, normalize(&data, normalization)?))
}

fn check_inputs(plan: &BenchmarkPlan, library: &[PureComponent]) -> Result<()> {
    plan.validate()?;
    if library.is_empty() {
        return Err(Error::invalid("library is empty"));
    }
    let need = plan
        .component_modes
        .iter()
        .map(|m| match m {
            ComponentMode::Fixed4 => 4,
            ComponentMode::Fixed6 => 6,
            ComponentMode::Random2to10 => 10,
        })
        .max()
        .unwrap_or(0);
    if library.len() < need {
        return Err(Error::invalid(format!(
            "library has {} components but the plan may need {need}",
            library.len()
        )));
    }
    Ok(())
}

/// Worker count when none is configured: the available parallelism.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Runs every dataset of `plan` on up to `workers` threads, handing each
/// finished record to `sink` in completion order. Runs for which `skip`
/// returns true are not executed.
pub fn execute(
    plan: &BenchmarkPlan,
    library: &[PureComponent],
    skip: &(dyn Fn(&RunKey) -> bool + Sync),
    workers: usize,
    sink: &(dyn Fn(RunRecord) + Sync),
) -> Result<()> {
    check_inputs(plan, library)?;
    let datasets = plan.datasets();
    let one = |key: &DatasetKey| run_dataset(plan, library, key, skip, &mut |r| sink(r));
    #[cfg(feature = "parallel")]
    if workers > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start {workers} workers: {e}")))?;
        pool.install(|| datasets.par_iter().for_each(one));
        return Ok(());
    }
    let _ = workers;
    datasets.iter().for_each(one);
    Ok(())
}

/// Runs the plan and returns its records sorted by key.
pub fn run_records(plan: &BenchmarkPlan, library: &[PureComponent], workers: usize) -> Result<Vec<RunRecord>> {
    let collected = std::sync::Mutex::new(Vec::with_capacity(plan.total_runs()));
    execute(plan, library, &|_| false, workers, &|r| collected.lock().expect("poisoned").push(r))?;
    let mut records = collected.into_inner().expect("poisoned");
    records.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(records)
}

pub fn run_plan(plan: &BenchmarkPlan, library: &[PureComponent]) -> Result<Vec<CellResult>> {
    Ok(cells_from_records(&run_records(plan, library, default_workers())?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub model: IntensityModel,
    pub noise_factor: f64,
    pub normalization: Normalization,
    pub mode: ComponentMode,
    pub technique: TechniqueId,
    pub k_offset: i32,
}

impl CellKey {
    fn sort_key(&self) -> (IntensityModel, u64, ComponentMode, Normalization, TechniqueId, i32) {
        (
            self.model,
            ordered_bits(self.noise_factor),
            self.mode,
            self.normalization,
            self.technique,
            self.k_offset,
        )
    }

    /// The same cell at another offset.
    pub fn with_offset(&self, k_offset: i32) -> CellKey {
        CellKey { k_offset, ..*self }
    }
}

impl Eq for CellKey {}
impl PartialOrd for CellKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for CellKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub key: CellKey,
    /// Successful datasets, ascending; parallel to `errors`.
    pub dataset_indices: Vec<usize>,
    pub errors: Vec<f64>,
    pub failures: usize,
    /// Runtime of every run that reached the technique, failed or not.
    pub runtimes: Vec<f64>,
    pub clamped: usize,
}

impl CellResult {
    pub fn mean_error(&self) -> Option<f64> {
        mean(&self.errors)
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Groups records into cells. The output order, and every value in it
/// except runtimes, depends only on the set of records.
pub fn cells_from_records(records: &[RunRecord]) -> Vec<CellResult> {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp(&b.key));
    let mut cells: BTreeMap<CellKey, CellResult> = BTreeMap::new();
    for r in sorted {
        let key = r.key.cell();
        let cell = cells.entry(key).or_insert_with(|| CellResult {
            key,
            dataset_indices: vec![],
            errors: vec![],
            failures: 0,
            runtimes: vec![],
            clamped: 0,
        });
        match (r.error, &r.failure) {
            (Some(e), None) => {
                cell.dataset_indices.push(r.key.dataset_index);
                cell.errors.push(e);
            }
            _ => cell.failures += 1,
        }
        if r.runtime_seconds > 0.0 {
            cell.runtimes.push(r.runtime_seconds);
        }
        cell.clamped += r.k_clamped as usize;
    }
    cells.into_values().collect()
}

/// Decade of the most common runtime magnitude; ties go to the faster
/// decade.
pub fn runtime_factor(runtimes: &[f64]) -> Option<i32> {
    let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
    for &t in runtimes.iter().filter(|t| **t > 0.0 && t.is_finite()) {
        *counts.entry(t.log10().floor() as i32).or_default() += 1;
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|(_, c)| *c == best).map(|(d, _)| d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub technique: TechniqueId,
    pub normalization: Normalization,
    pub n: usize,
    pub failures: usize,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub runtime_factor: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateTable {
    pub rows: Vec<Table1Row>,
}

/// Mean, min and max dataset error per technique × normalization at the
/// exact component count, pooled over models, noise levels and modes.
pub fn aggregate_table1(cells: &[CellResult]) -> AggregateTable {
    let mut groups: BTreeMap<(TechniqueId, Normalization), (Vec<f64>, usize, Vec<f64>)> = BTreeMap::new();
    for c in cells.iter().filter(|c| c.key.k_offset == 0) {
        let g = groups.entry((c.key.technique, c.key.normalization)).or_default();
        g.0.extend(&c.errors);
        g.1 += c.failures;
        g.2.extend(&c.runtimes);
    }
    let rows = groups
        .into_iter()
        .map(|((technique, normalization), (errors, failures, runtimes))| Table1Row {
            technique,
            normalization,
            n: errors.len(),
            failures,
            mean: mean(&errors),
            min: errors.iter().copied().reduce(f64::min),
            max: errors.iter().copied().reduce(f64::max),
            runtime_factor: runtime_factor(&runtimes),
        })
        .collect();
    AggregateTable { rows }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub group: String,
    /// Ratio per offset; `None` when no dataset succeeded at both counts or
    /// the exact-count mean is zero.
    pub ratios: BTreeMap<i32, Option<f64>>,
    /// Number of paired datasets per offset.
    pub pairs: BTreeMap<i32, usize>,
}

/// Overprediction ratios per technique group. For each offset the errors
/// are paired by cell and dataset, so both sides cover the same datasets;
/// sub-variants are pooled.
pub fn aggregate_table2(cells: &[CellResult]) -> Vec<Table2Row> {
    let by_key: BTreeMap<CellKey, &CellResult> = cells.iter().map(|c| (c.key, c)).collect();
    let offsets: BTreeSet<i32> = cells.iter().map(|c| c.key.k_offset).collect();
    let mut pooled: BTreeMap<String, BTreeMap<i32, (Vec<f64>, Vec<f64>)>> = BTreeMap::new();
    for exact in cells.iter().filter(|c| c.key.k_offset == 0) {
        let entry = pooled.entry(exact.key.technique.group()).or_default();
        for &j in &offsets {
            let slot = entry.entry(j).or_default();
            let Some(other) = by_key.get(&exact.key.with_offset(j)) else { continue };
            for (idx, &e) in exact.dataset_indices.iter().zip(&exact.errors) {
                if let Ok(pos) = other.dataset_indices.binary_search(idx) {
                    slot.0.push(e);
                    slot.1.push(other.errors[pos]);
                }
            }
        }
    }
    pooled
        .into_iter()
        .map(|(group, per)| Table2Row {
            group,
            pairs: per.iter().map(|(&j, (a, _))| (j, a.len())).collect(),
            ratios: per
                .into_iter()
                .map(|(j, (a, b))| (j, crate::scoring::overprediction_ratio(&a, &b).ok()))
                .collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3 {
    pub noise_levels: Vec<f64>,
    pub rows: Vec<Table3Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Row {
    pub group: String,
    /// Mean error per entry of `noise_levels`.
    pub means: Vec<Option<f64>>,
}

/// Mean error per technique group and noise level, unnormalized data at
/// the exact component count.
pub fn aggregate_table3(cells: &[CellResult]) -> Table3 {
    let selected: Vec<&CellResult> = cells
        .iter()
        .filter(|c| c.key.k_offset == 0 && c.key.normalization == Normalization::None)
        .collect();
    let mut noise: Vec<f64> = selected.iter().map(|c| c.key.noise_factor).collect();
    noise.sort_by(f64::total_cmp);
    noise.dedup();
    let mut pooled: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for c in selected {
        let slot = noise.iter().position(|n| *n == c.key.noise_factor).expect("listed");
        pooled.entry(c.key.technique.group()).or_insert_with(|| vec![vec![]; noise.len()])[slot].extend(&c.errors);
    }
    Table3 {
        rows: pooled
            .into_iter()
            .map(|(group, cols)| Table3Row {
                group,
                means: cols.iter().map(|v| mean(v)).collect(),
            })
            .collect(),
        noise_levels: noise,
    }
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6e}"))
}

/// The aggregate CSV files of a report, by file name. Runtimes live only in
/// `runtime.csv`, so the table files are identical across machines and
/// worker counts.
pub fn report_csvs(cells: &[CellResult]) -> BTreeMap<&'static str, String> {
    let t1 = aggregate_table1(cells);
    let mut table1 = String::from("technique,normalization,n,failures,mean,min,max\n");
    let mut runtime = String::from("technique,normalization,runtime_factor\n");
    for r in &t1.rows {
        let _ = writeln!(
            table1,
            "{},{},{},{},{},{},{}",
            r.technique,
            r.normalization,
            r.n,
            r.failures,
            num(r.mean),
            num(r.min),
            num(r.max)
        );
        let factor = r.runtime_factor.map_or_else(|| "NA".to_string(), |f| f.to_string());
        let _ = writeln!(runtime, "{},{},{factor}", r.technique, r.normalization);
    }

    let t2 = aggregate_table2(cells);
    let offsets: BTreeSet<i32> = t2.iter().flat_map(|r| r.ratios.keys().copied()).collect();
    let mut table2 = String::from("group");
    for j in &offsets {
        let _ = write!(table2, ",k{j:+}");
    }
    table2.push_str(",paired_datasets\n");
    for r in &t2 {
        table2.push_str(&r.group);
        for j in &offsets {
            let _ = write!(table2, ",{}", num(r.ratios.get(j).copied().flatten()));
        }
        let _ = writeln!(table2, ",{}", r.pairs.get(&0).copied().unwrap_or(0));
    }

    let t3 = aggregate_table3(cells);
    let mut table3 = String::from("group");
    for n in &t3.noise_levels {
        let _ = write!(table3, ",noise_{n}");
    }
    table3.push('\n');
    for r in &t3.rows {
        table3.push_str(&r.group);
        for m in &r.means {
            let _ = write!(table3, ",{}", num(*m));
        }
        table3.push('\n');
    }

    BTreeMap::from([
        ("table1.csv", table1),
        ("table2.csv", table2),
        ("table3.csv", table3),
        ("runtime.csv", runtime),
    ])
}
