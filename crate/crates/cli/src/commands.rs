use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use unmix_core::bench::{cells_from_records, default_workers, execute, report_csvs, BenchmarkPlan, RunKey, RunRecord};
use unmix_core::bss::decompose as run_technique;
use unmix_core::io::{
    read_json, to_json, write_atomic, write_json, write_spectra_csv, ComponentSetFile, DatasetFile, LibraryFile,
    ReportFile,
};
use unmix_core::lineshape::{generate_library, LibraryGridSpec, PureComponent, SpectrumGrid};
use unmix_core::numkernel::derive_seed;
use unmix_core::scoring::{fit_pair, match_components};
use unmix_core::synth::{assemble_dataset, normalize, sample_components};
use unmix_core::Matrix;

use crate::{svg, Bench, CliError, Decompose, GenerateMixtures, GeneratePure, Score};

type Result<T> = std::result::Result<T, CliError>;

fn refuse_overwrite(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(CliError::Usage(format!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(())
}

fn data_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    read_json(path).map_err(|e| CliError::Data(e.to_string()))
}

/// Parses a hand-written config file, naming the offending field on error.
fn load_config<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let at = if field == "." { String::new() } else { format!("field `{field}`: ") };
        data_err(path, format!("bad {what}: {at}{}", e.into_inner()))
    })
}

fn load_library(path: &Path) -> Result<Vec<PureComponent>> {
    let file: LibraryFile = load(path)?;
    file.into_components().map_err(|e| data_err(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| data_err(dir, e))
}

pub fn generate_pure(a: GeneratePure) -> Result<()> {
    refuse_overwrite(&a.out, a.force)?;
    let spec = match a.grid_spec.as_str() {
        "standard" => LibraryGridSpec::standard(),
        "desk" => LibraryGridSpec::desk(),
        path => load_config(Path::new(path), "grid spec")?,
    };
    spec.validate()
        .map_err(|e| CliError::Data(format!("bad grid spec: {e}")))?;
    let grid = SpectrumGrid {
        n_points: a.grid.n_points,
        sweep_width_hz: a.grid.sweep_width_hz,
        larmor_hz: a.grid.larmor_hz,
        center_hz: a.grid.center_hz,
    };
    grid.validate()?;
    let library = generate_library(&spec, &grid)?;
    let file = LibraryFile::new(&spec, &grid, &library)?;
    write_json(&a.out, &file)?;
    println!(
        "wrote {} components to {} (checksum {})",
        library.len(),
        a.out.display(),
        file.manifest.checksum
    );
    Ok(())
}

pub fn generate_mixtures(a: GenerateMixtures) -> Result<()> {
    if !(a.noise.is_finite() && a.noise >= 0.0) {
        return Err(CliError::Usage("--noise must be finite and nonnegative".into()));
    }
    let library = load_library(&a.library)?;
    let k = a.components as usize;
    if library.len() < k {
        return Err(CliError::Data(format!(
            "library holds {} components, fewer than --components {k}",
            library.len()
        )));
    }
    ensure_dir(&a.out)?;
    for i in 0..a.count {
        let path = a.out.join(format!("mixture_{i:03}.json"));
        refuse_overwrite(&path, a.force)?;
        let pures = sample_components(&library, k, derive_seed(a.seed, &[i as u64, 1]))?;
        let dataset = assemble_dataset(&pures, a.model, derive_seed(a.seed, &[i as u64, 2]), a.noise)?;
        write_json(&path, &DatasetFile::from_dataset(&dataset))?;
        if a.csv {
            let mut buf = Vec::new();
            write_spectra_csv(&mut buf, &dataset.grid, &dataset.spectra)?;
            write_atomic(&path.with_extension("csv"), &buf)?;
        }
    }
    println!("wrote {} datasets to {}", a.count, a.out.display());
    Ok(())
}

pub fn decompose(a: Decompose) -> Result<()> {
    refuse_overwrite(&a.out, a.force)?;
    let file: DatasetFile = load(&a.input)?;
    let dataset = file.into_dataset().map_err(|e| data_err(&a.input, e))?;
    let prepared = normalize(&dataset, a.normalization).map_err(|e| data_err(&a.input, e))?;
    let mut set = run_technique(&prepared, a.technique, a.k, a.seed)?;
    set.metadata
        .insert("normalization".into(), serde_json::Value::from(a.normalization.to_string()));
    set.metadata.insert("seed".into(), serde_json::Value::from(a.seed));
    write_json(&a.out, &ComponentSetFile::new(&set, Some(dataset.grid)))?;
    if let Some(csv) = &a.csv {
        let mut buf = Vec::new();
        write_spectra_csv(&mut buf, &dataset.grid, &set.components)?;
        write_atomic(csv, &buf)?;
    }
    println!(
        "{}: {} components in {:.3} s{}",
        a.technique,
        set.components.nrows(),
        set.runtime_seconds,
        if set.converged { "" } else { " (not converged)" }
    );
    Ok(())
}

/// Pure spectra and their ids, from a library (optionally filtered) or a
/// dataset file.
fn load_pures(a: &Score) -> Result<(Vec<String>, Matrix)> {
    let text = fs::read_to_string(&a.pure).map_err(|e| data_err(&a.pure, e))?;
    let kind = unmix_core::io::peek_kind(&text).map_err(|e| data_err(&a.pure, e))?;
    match kind.as_str() {
        "library" => {
            let library = load_library(&a.pure)?;
            let mut wanted = a.ids.clone();
            if let Some(d) = &a.dataset {
                let file: DatasetFile = load(d)?;
                let p = file
                    .provenance
                    .ok_or_else(|| CliError::Data(format!("{} has no provenance", d.display())))?;
                wanted.extend(p.components.into_iter().map(|c| c.component_id));
            }
            let chosen: Vec<&PureComponent> = if wanted.is_empty() {
                library.iter().collect()
            } else {
                wanted
                    .iter()
                    .map(|id| {
                        library
                            .iter()
                            .find(|c| &c.id == id)
                            .ok_or_else(|| CliError::Data(format!("library has no component {id}")))
                    })
                    .collect::<Result<_>>()?
            };
            let n = chosen[0].intensity.len();
            let m = Matrix::from_fn(chosen.len(), n, |i, c| chosen[i].intensity[c]);
            Ok((chosen.iter().map(|c| c.id.clone()).collect(), m))
        }
        "dataset" => {
            let file: DatasetFile = serde_json::from_str(&text).map_err(|e| data_err(&a.pure, e))?;
            let d = file.into_dataset().map_err(|e| data_err(&a.pure, e))?;
            let ids = (0..d.spectra.nrows()).map(|i| format!("row{i}")).collect();
            Ok((ids, d.spectra))
        }
        other => Err(CliError::Data(format!(
            "{}: expected a library or dataset file, found {other}",
            a.pure.display()
        ))),
    }
}

pub fn score(a: Score) -> Result<()> {
    refuse_overwrite(&a.out, a.force)?;
    let file: ComponentSetFile = load(&a.predicted)?;
    let set = file.into_component_set().map_err(|e| data_err(&a.predicted, e))?;
    let (ids, pures) = load_pures(&a)?;
    if set.components.ncols() != pures.ncols() {
        return Err(CliError::Data(format!(
            "predicted components have {} points but pure spectra have {}",
            set.components.ncols(),
            pures.ncols()
        )));
    }
    let report = match_components(&set.components, &pures)?;
    if let Some(dir) = &a.svg {
        ensure_dir(dir)?;
        for p in &report.pairs {
            let pred: Vec<f64> = set.components.row(p.predicted).iter().copied().collect();
            let pure: Vec<f64> = pures.row(p.pure).iter().copied().collect();
            // Map the prediction onto the pure's scale for display.
            let shown: Vec<f64> = match fit_pair(&pure, &pred) {
                Ok(f) => pred.iter().map(|v| f.b + f.m * v).collect(),
                Err(_) => pred.clone(),
            };
            let title = format!("predicted {} vs {}", p.predicted, ids[p.pure]);
            let path = dir.join(format!("pair_{}_{}.svg", p.predicted, p.pure));
            write_atomic(&path, svg::overlay(&pure, &shown, &title).as_bytes())?;
        }
    }
    println!(
        "{} pairs, ensemble score {:.6e}, dataset error {}, discarded {:?}, unmatched {:?}",
        report.pairs.len(),
        report.ensemble_score,
        report.dataset_error.map_or("NA".to_string(), |e| format!("{e:.6e}")),
        report.discarded_predicted,
        report.unmatched_pure
    );
    write_json(&a.out, &ReportFile::new(report, Some(set.technique), ids))?;
    Ok(())
}

fn load_plan(spec: &str) -> Result<BenchmarkPlan> {
    let plan = match spec {
        "desk" => BenchmarkPlan::desk(2024),
        "full" => BenchmarkPlan::full(2024),
        path => load_config(Path::new(path), "plan")?,
    };
    plan.validate()
        .map_err(|e| CliError::Data(format!("bad plan: {e}")))?;
    Ok(plan)
}

/// Reads complete records, truncating a partial last line left by an
/// interrupted run.
fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let Ok(file) = File::open(path) else {
        return Ok(vec![]);
    };
    let mut records = vec![];
    let mut good_bytes = 0u64;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| data_err(path, e))?;
        if n == 0 || !line.ends_with('\n') {
            break;
        }
        match serde_json::from_str::<RunRecord>(line.trim_end()) {
            Ok(r) => records.push(r),
            Err(_) => break,
        }
        good_bytes += n as u64;
    }
    let f = OpenOptions::new().write(true).open(path).map_err(|e| data_err(path, e))?;
    f.set_len(good_bytes).map_err(|e| data_err(path, e))?;
    Ok(records)
}

pub fn bench(a: Bench) -> Result<()> {
    let mut plan = load_plan(&a.plan)?;
    if let Some(seed) = a.seed {
        plan.master_seed = seed;
    }
    let workers = a.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let library = load_library(&a.library)?;
    ensure_dir(&a.out)?;
    let plan_path = a.out.join("plan.json");
    let records_path = a.out.join("records.jsonl");
    if a.resume {
        if plan_path.exists() {
            let previous: BenchmarkPlan = load(&plan_path)?;
            if previous != plan {
                return Err(CliError::Usage(format!(
                    "{} holds a different plan; cannot resume",
                    plan_path.display()
                )));
            }
        }
    } else if records_path.exists() {
        if !a.force {
            return Err(CliError::Usage(format!(
                "{} already holds results; pass --resume to continue or --force to start over",
                a.out.display()
            )));
        }
        fs::remove_file(&records_path).map_err(|e| data_err(&records_path, e))?;
    }
    write_json(&plan_path, &plan)?;

    let previous = read_records(&records_path)?;
    let done: BTreeSet<RunKey> = previous.iter().map(|r| r.key).collect();
    let out = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&records_path)
        .map_err(|e| data_err(&records_path, e))?;
    let sink = Mutex::new(out);
    let write_error: Mutex<Option<String>> = Mutex::new(None);
    let total = plan.total_runs();
    let todo = total - done.len().min(total);
    eprintln!(
        "{todo} of {total} runs to go on {workers} worker(s), {} datasets",
        plan.datasets().len()
    );
    execute(&plan, &library, &|k| done.contains(k), workers, &|r| {
        let line = match serde_json::to_string(&r) {
            Ok(l) => l,
            Err(e) => {
                *write_error.lock().expect("poisoned") = Some(e.to_string());
                return;
            }
        };
        let mut f = sink.lock().expect("poisoned");
        if let Err(e) = writeln!(f, "{line}").and_then(|_| f.flush()) {
            *write_error.lock().expect("poisoned") = Some(e.to_string());
        }
    })?;
    if let Some(e) = write_error.into_inner().expect("poisoned") {
        return Err(data_err(&records_path, e));
    }
    drop(sink);

    let records = read_records(&records_path)?;
    let cells = cells_from_records(&records);
    for (name, text) in report_csvs(&cells) {
        write_atomic(&a.out.join(name), text.as_bytes())?;
    }
    write_atomic(&a.out.join("cells.json"), to_json(&cells)?.as_bytes())?;
    let failures: usize = cells.iter().map(|c| c.failures).sum();
    println!(
        "{} runs recorded ({failures} failed); tables in {}",
        records.len(),
        a.out.display()
    );
    Ok(())
}
