//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILING` are reported but do not fail the
//! target; the README explains why each is out of reach. Any other failure
//! exits nonzero.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use unmix_core::bench::{run_records, BenchmarkPlan, ComponentMode, RunRecord};
use unmix_core::bss::{decompose, NnmfInit, TechniqueId};
use unmix_core::io::{write_json, LibraryFile};
use unmix_core::lineshape::{generate_library, simulate_pure, LibraryGridSpec, PureComponent, QuadrupolarParams, SpectrumGrid};
use unmix_core::numkernel::{assign_max, derive_seed, nelder_mead, NelderMeadOptions, SeededRng};
use unmix_core::scoring::{fit_pair, match_components, overprediction_ratio};
use unmix_core::synth::{
    assemble_dataset, inversion_profile, nutation_profile, IntensityModel, Normalization, RECOVERY_FACTOR,
};
use unmix_core::Matrix;

const KNOWN_FAILING: &[u32] = &[5, 7];
const MASTER_SEED: u64 = 2024;
const CORPUS_NOISE: f64 = 0.000316;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn affine_fit_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(derive_seed(MASTER_SEED, &[1]));
    let (mut worst_rel, mut closed_worse) = (0f64, 0usize);
    for _ in 0..1000 {
        let n = 8 + rng.below(57);
        let pure: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
        let (b, m, noise) = (rng.gaussian(), rng.uniform_range(-3.0, 3.0), rng.uniform_range(0.01, 1.0));
        let pred: Vec<f64> = pure.iter().map(|q| b + m * q + noise * rng.gaussian()).collect();
        let closed = fit_pair(&pred, &pure).expect("nonconstant pure").lack_of_fit;
        let objective =
            |x: &[f64]| pred.iter().zip(&pure).map(|(p, q)| (p - x[0] - x[1] * q).powi(2)).sum::<f64>();
        let opts = NelderMeadOptions { xtol: 1e-12, ftol: 1e-15, ..NelderMeadOptions::default() };
        let mut x = vec![0.0, 1.0];
        let mut best = f64::INFINITY;
        for _ in 0..30 {
            let r = nelder_mead(objective, &x, &opts).expect("finite objective");
            let improved = r.fx < best * (1.0 - 1e-14);
            best = best.min(r.fx);
            x = r.x;
            if !improved {
                break;
            }
        }
        worst_rel = worst_rel.max(rel(closed, best));
        if closed > best * (1.0 + 1e-12) {
            closed_worse += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_rel < 1e-6 && closed_worse == 0 && secs < 10.0,
        format!("1000 pairs, worst relative gap {worst_rel:.2e}, closed form worse {closed_worse}x, {secs:.2} s"),
    )
}

fn brute_force(score: &Matrix) -> (Vec<(usize, usize)>, f64) {
    fn permute(cols: &mut Vec<usize>, at: usize, out: &mut dyn FnMut(&[usize])) {
        if at == cols.len() {
            out(cols);
            return;
        }
        for i in at..cols.len() {
            cols.swap(at, i);
            permute(cols, at + 1, out);
            cols.swap(at, i);
        }
    }
    let k = score.nrows();
    let mut cols: Vec<usize> = (0..k).collect();
    let mut best = (vec![], f64::NEG_INFINITY);
    permute(&mut cols, 0, &mut |p| {
        let total = (0..k).fold(0.0, |acc, r| acc + score[(r, p[r])]);
        if total > best.1 {
            best = ((0..k).map(|r| (r, p[r])).collect(), total);
        }
    });
    best
}

fn assignment_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(derive_seed(MASTER_SEED, &[2]));
    let mut mismatches = 0;
    for k in 2..=7 {
        for _ in 0..200 {
            // Scores shaped like the real ones: reciprocals of lack of fit.
            let score = Matrix::from_fn(k, k, |_, _| 1.0 / (1e-6 + rng.uniform() * 10f64.powf(rng.uniform_range(-4.0, 2.0))));
            let got = assign_max(&score).expect("finite scores");
            let (pairs, total) = brute_force(&score);
            if got.pairs != pairs || got.total != total {
                mismatches += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 60.0,
        format!("1200 matrices (k = 2..7), {mismatches} mismatches, {secs:.2} s"),
    )
}

fn lineshape_degenerate() -> Outcome {
    let grid = SpectrumGrid::standard();
    let mut worst = 0f64;
    for (iso, smoothing) in [(0.0, 8.0), (1234.5, 32.0), (-1500.0, 16.0), (200.0, 64.0)] {
        let params = QuadrupolarParams {
            cq_hz: 0.0,
            eta: 0.4,
            delta_iso_hz: iso,
            spin: 1.5,
            spin_rate_hz: 10_000.0,
            gaussian_broaden: smoothing,
        };
        let s = simulate_pure(&params, &grid).expect("valid params").intensity;
        let f = grid.frequencies();
        let total: f64 = s.iter().sum();
        let mu = f.iter().zip(&s).map(|(x, w)| x * w).sum::<f64>() / total;
        let m2 = f.iter().zip(&s).map(|(x, w)| (x - mu).powi(2) * w).sum::<f64>() / total;
        let m3 = f.iter().zip(&s).map(|(x, w)| (x - mu).powi(3) * w).sum::<f64>() / total;
        worst = worst.max((m3 / m2.powf(1.5)).abs());
    }
    let count = LibraryGridSpec::standard().points().len();
    outcome(
        worst < 1e-6 && count == 32_000,
        format!("max |skew| at cq = 0 {worst:.2e}, standard grid {count} components"),
    )
}

fn intensity_analytics() -> Outcome {
    let mut worst = 0f64;
    for t1 in [0.5, 1.0, 1.7, 2.0] {
        let p = inversion_profile(0.8, t1, &[t1 * 2f64.ln(), RECOVERY_FACTOR * t1]).expect("valid");
        worst = worst.max(p[0].abs() / 0.8);
        let recovery = p[1] / 0.8;
        if (recovery - 0.985).abs() > 1e-4 {
            worst = f64::INFINITY;
        }
    }
    for f in [0.5, 0.6, 0.75] {
        let p = nutation_profile(0.7, f, &[0.25 / f]).expect("valid");
        worst = worst.max(p[0].abs() / 0.7);
    }
    outcome(
        worst < 1e-10,
        format!("largest relative residual at the analytic nulls {worst:.2e}, 98.5% recovery within 1e-4"),
    )
}

fn support(c: &PureComponent) -> (usize, usize) {
    let peak = c.intensity.iter().fold(0f64, |a, v| a.max(v.abs()));
    let first = c.intensity.iter().position(|v| v.abs() > 1e-12 * peak).unwrap_or(0);
    let last = c.intensity.iter().rposition(|v| v.abs() > 1e-12 * peak).unwrap_or(0);
    (first, last)
}

fn best_worst_pair(set_for: impl Fn(TechniqueId) -> Option<f64>, ids: &[TechniqueId]) -> f64 {
    ids.iter().filter_map(|&t| set_for(t)).fold(f64::INFINITY, f64::min)
}

fn noiseless_recovery(library: &[PureComponent]) -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(derive_seed(MASTER_SEED, &[5]));
    let simplisma: Vec<TechniqueId> =
        TechniqueId::all().into_iter().filter(|t| matches!(t, TechniqueId::Simplisma { .. })).collect();
    let nnmf: Vec<TechniqueId> = [NnmfInit::Random, NnmfInit::Nndsvd, NnmfInit::Nndsvda, NnmfInit::Nndsvdar]
        .into_iter()
        .map(TechniqueId::Nnmf)
        .collect();
    let (mut ok_simplisma, mut ok_nnmf) = (0, 0);
    let mut datasets = 0;
    while datasets < 20 {
        let (a, b) = (&library[rng.below(library.len())], &library[rng.below(library.len())]);
        let (sa, sb) = (support(a), support(b));
        if sa.1 >= sb.0 && sb.1 >= sa.0 {
            continue;
        }
        let data = assemble_dataset(&[a, b], IntensityModel::Inversion, derive_seed(MASTER_SEED, &[5, datasets as u64]), 0.0)
            .expect("valid mixture");
        let pures = Matrix::from_fn(2, a.intensity.len(), |i, c| [a, b][i].intensity[c]);
        // Worst normalized lack of fit over the two pairs, for one technique.
        let worst = |t: TechniqueId| {
            let set = decompose(&data, t, 2, derive_seed(MASTER_SEED, &[5, datasets as u64, 1])).ok()?;
            let report = match_components(&set.components, &pures).ok()?;
            Some(report.pairs.iter().map(|p| p.normalized_lack_of_fit).fold(0.0, f64::max))
        };
        if best_worst_pair(worst, &simplisma) < 1e-3 {
            ok_simplisma += 1;
        }
        if best_worst_pair(worst, &nnmf) < 1e-3 {
            ok_nnmf += 1;
        }
        datasets += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ok_simplisma >= 18 && ok_nnmf >= 18 && secs < 300.0,
        format!("exact recovery on SIMPLISMA {ok_simplisma}/20, NNMF {ok_nnmf}/20, {secs:.1} s"),
    )
}

/// Errors for one technique and offset, keyed by dataset.
type Errors = BTreeMap<(IntensityModel, usize, u64), f64>;

fn errors_of(records: &[RunRecord], technique: TechniqueId, offset: i32, norm: Normalization, noise: f64) -> Errors {
    records
        .iter()
        .filter(|r| {
            r.key.technique == technique
                && r.key.k_offset == offset
                && r.key.normalization == norm
                && r.key.noise_factor == noise
        })
        .filter_map(|r| r.error.map(|e| ((r.key.model, r.key.dataset_index, noise.to_bits()), e)))
        .collect()
}

fn mean_of(e: &Errors) -> f64 {
    mean(&e.values().copied().collect::<Vec<_>>())
}

fn plan(per_cell: usize, noise: Vec<f64>, norms: Vec<Normalization>, techniques: Vec<TechniqueId>, offsets: Vec<i32>) -> BenchmarkPlan {
    BenchmarkPlan {
        master_seed: MASTER_SEED,
        n_datasets_per_cell: per_cell,
        component_modes: vec![ComponentMode::Fixed4],
        models: vec![IntensityModel::Inversion, IntensityModel::Nutation],
        noise_levels: noise,
        normalizations: norms,
        techniques,
        k_offsets: offsets,
    }
}

struct Corpus {
    exact: Vec<RunRecord>,
    best_simplisma: TechniqueId,
    best_nnmf: TechniqueId,
}

fn best_variant(records: &[RunRecord], family: &[TechniqueId]) -> TechniqueId {
    *family
        .iter()
        .min_by(|a, b| {
            let ea = mean_of(&errors_of(records, **a, 0, Normalization::None, CORPUS_NOISE));
            let eb = mean_of(&errors_of(records, **b, 0, Normalization::None, CORPUS_NOISE));
            ea.total_cmp(&eb)
        })
        .expect("nonempty family")
}

fn family(pred: impl Fn(&TechniqueId) -> bool) -> Vec<TechniqueId> {
    TechniqueId::all().into_iter().filter(pred).collect()
}

/// Criterion-6 corpus: 30 inversion and 30 nutation datasets of four
/// components, exact k, no normalization.
fn corpus(library: &[PureComponent]) -> Corpus {
    let mut techniques = vec![TechniqueId::Svd, TechniqueId::Pca, TechniqueId::FastIca, TechniqueId::Vca];
    techniques.extend(family(|t| matches!(t, TechniqueId::Simplisma { .. } | TechniqueId::Nnmf(_))));
    let p = plan(30, vec![CORPUS_NOISE], vec![Normalization::None], techniques, vec![0]);
    let exact = run_records(&p, library, 1).expect("plan runs");
    let best_simplisma = best_variant(&exact, &family(|t| matches!(t, TechniqueId::Simplisma { .. })));
    let best_nnmf = best_variant(&exact, &family(|t| matches!(t, TechniqueId::Nnmf(_))));
    Corpus { exact, best_simplisma, best_nnmf }
}

fn ranking(c: &Corpus) -> Outcome {
    let e = |t| errors_of(&c.exact, t, 0, Normalization::None, CORPUS_NOISE);
    let top = [TechniqueId::FastIca, c.best_simplisma, c.best_nnmf];
    let bottom = [TechniqueId::Svd, TechniqueId::Pca];
    let means: Vec<(TechniqueId, f64, usize)> =
        top.iter().chain(&bottom).map(|&t| (t, mean_of(&e(t)), e(t).len())).collect();
    let worst_top = means[..3].iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
    let best_bottom = means[3..].iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let all_scored = means.iter().all(|m| m.2 == 60);
    let listing: Vec<String> = means.iter().map(|(t, m, n)| format!("{t} {m:.3e} (n={n})")).collect();
    outcome(worst_top < best_bottom && all_scored, listing.join(", "))
}

fn overprediction(c: &Corpus, library: &[PureComponent]) -> Outcome {
    let techniques = vec![TechniqueId::FastIca, c.best_simplisma, c.best_nnmf, TechniqueId::Vca];
    // The offset-0 side comes from the corpus runs. A plan must contain
    // offset 0, so those runs are repeated here and ignored.
    let p = plan(30, vec![CORPUS_NOISE], vec![Normalization::None], techniques.clone(), vec![0, 4]);
    let plus = run_records(&p, library, 1).expect("plan runs");
    let bounds = [(1.5, true), (1.5, true), (1.3, false), (1.2, false)];
    let mut pass = true;
    let mut parts = vec![];
    for (t, (bound, at_least)) in techniques.iter().zip(bounds) {
        let exact = errors_of(&c.exact, *t, 0, Normalization::None, CORPUS_NOISE);
        let over = errors_of(&plus, *t, 4, Normalization::None, CORPUS_NOISE);
        let (a, b): (Vec<f64>, Vec<f64>) =
            exact.iter().filter_map(|(k, e)| over.get(k).map(|o| (*e, *o))).unzip();
        let ratio = overprediction_ratio(&a, &b).unwrap_or(f64::NAN);
        let ok = a.len() >= 40 && if at_least { ratio >= bound } else { ratio <= bound };
        pass &= ok;
        parts.push(format!("{t} {ratio:.2} ({} {bound}, n={})", if at_least { ">=" } else { "<=" }, a.len()));
    }
    outcome(pass, parts.join(", "))
}

fn noise_stability(c: &Corpus, library: &[PureComponent]) -> Outcome {
    let techniques = vec![TechniqueId::FastIca, c.best_simplisma, c.best_nnmf];
    let p = plan(10, vec![0.0001, 0.001], vec![Normalization::None], techniques.clone(), vec![0]);
    let records = run_records(&p, library, 1).expect("plan runs");
    let mut pass = true;
    let mut parts = vec![];
    for t in techniques {
        let lo = errors_of(&records, t, 0, Normalization::None, 0.0001);
        let hi = errors_of(&records, t, 0, Normalization::None, 0.001);
        let ratio = mean_of(&hi) / mean_of(&lo);
        pass &= ratio < 5.0 && lo.len() >= 20 && hi.len() >= 20;
        parts.push(format!("{t} x{ratio:.2} (n={}/{})", lo.len(), hi.len()));
    }
    outcome(pass, parts.join(", "))
}

fn normalization_indifference(c: &Corpus, library: &[PureComponent]) -> Outcome {
    let t = TechniqueId::Nnmf(NnmfInit::Nndsvd);
    let p = plan(30, vec![CORPUS_NOISE], vec![Normalization::Peak, Normalization::Area], vec![t], vec![0]);
    let records = run_records(&p, library, 1).expect("plan runs");
    let means = [
        mean_of(&errors_of(&c.exact, t, 0, Normalization::None, CORPUS_NOISE)),
        mean_of(&errors_of(&records, t, 0, Normalization::Peak, CORPUS_NOISE)),
        mean_of(&errors_of(&records, t, 0, Normalization::Area, CORPUS_NOISE)),
    ];
    let spread = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (means[i] - means[j]).abs() / means[i].min(means[j]))
        .fold(0.0, f64::max);
    outcome(
        spread < 0.25,
        format!(
            "nnmf:nndsvd none/peak/area {:.3e}/{:.3e}/{:.3e}, largest pairwise gap {:.1}%",
            means[0],
            means[1],
            means[2],
            100.0 * spread
        ),
    )
}

fn parallel_determinism(library_file: &Path, dir: &Path) -> Outcome {
    let plan_path = dir.join("plan.json");
    let p = plan(
        3,
        vec![CORPUS_NOISE],
        vec![Normalization::None, Normalization::Peak],
        vec![
            TechniqueId::Svd,
            TechniqueId::FastIca,
            TechniqueId::Simplisma { offset_percent: 0 },
            TechniqueId::Nnmf(NnmfInit::Random),
            TechniqueId::Vca,
        ],
        vec![0, 1],
    );
    write_json(&plan_path, &p).expect("writable");
    let run = |workers: &str| {
        let out = dir.join(format!("w{workers}"));
        let status = Command::new(env!("CARGO_BIN_EXE_unmix"))
            .args(["bench", "--plan"])
            .arg(&plan_path)
            .arg("--library")
            .arg(library_file)
            .arg("--out")
            .arg(&out)
            .args(["--workers", workers])
            .output()
            .expect("binary runs");
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        ["table1.csv", "table2.csv", "table3.csv"].map(|n| fs::read(out.join(n)).expect("table written"))
    };
    let one = run("1");
    let eight = run("8");
    outcome(one == eight, format!("{} runs, tables identical: {}", p.total_runs(), one == eight))
}

fn main() {
    let total = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = vec![];
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!("criterion {n:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };

    report(1, "affine fit oracle", affine_fit_oracle());
    report(2, "assignment oracle", assignment_oracle());
    report(3, "lineshape degenerate case", lineshape_degenerate());
    report(4, "intensity model analytics", intensity_analytics());

    let start = Instant::now();
    let spec = LibraryGridSpec::desk();
    let grid = SpectrumGrid::standard();
    let library = generate_library(&spec, &grid).expect("desk library");
    println!("   (desk library: {} components in {:.1} s)", library.len(), start.elapsed().as_secs_f64());

    report(5, "noiseless exact recovery", noiseless_recovery(&library));
    let start = Instant::now();
    let c = corpus(&library);
    println!(
        "   (corpus: {} runs in {:.1} s; best SIMPLISMA {}, best NNMF {})",
        c.exact.len(),
        start.elapsed().as_secs_f64(),
        c.best_simplisma,
        c.best_nnmf
    );
    report(6, "ranking reproduction", ranking(&c));
    report(7, "overprediction behaviour", overprediction(&c, &library));
    report(8, "noise stability", noise_stability(&c, &library));
    report(9, "normalization indifference", normalization_indifference(&c, &library));

    let dir = tempfile::tempdir().expect("temp dir");
    let library_file = dir.path().join("library.json");
    write_json(&library_file, &LibraryFile::new(&spec, &grid, &library).expect("library file")).expect("writable");
    report(10, "determinism and parallel safety", parallel_determinism(&library_file, dir.path()));

    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("{passed}/{} criteria pass ({:.0} s)", results.len(), total.elapsed().as_secs_f64());
    let unexpected: Vec<u32> =
        results.iter().filter(|r| !r.2.pass && !KNOWN_FAILING.contains(&r.0)).map(|r| r.0).collect();
    let fixed: Vec<u32> = results.iter().filter(|r| r.2.pass && KNOWN_FAILING.contains(&r.0)).map(|r| r.0).collect();
    if !fixed.is_empty() {
        println!("note: criteria {fixed:?} are listed as known failures but passed");
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
