//! Subcommand bodies. Every write lands under the chosen output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use fairsurr::balanced::BalancedConfig;
use fairsurr::dataset::{self, DatasetSchema, IngestedSplits};
use fairsurr::metrics;
use fairsurr::report::{self, select_on_validation, AggregateRow, FairnessReport};
use fairsurr::surrogates::Surrogate;
use fairsurr::synth::SynthDataset;
use fairsurr::trainer::{self, TrainConfig};
use fairsurr::verify::{self, TrialConfig};
use fairsurr::{Error, Result};

use crate::config::ExperimentConfig;

pub fn ensure_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text)?;
    Ok(())
}

fn load_splits(cfg: &ExperimentConfig, seed: u64) -> Result<IngestedSplits> {
    let schema = DatasetSchema::from_json_file(&cfg.schema)?;
    let spec = cfg.split.spec(seed)?;
    dataset::load_split_encode(&cfg.csv, &schema, &spec)
}

/// Run `f` over the seeds, optionally on a rayon pool of `jobs` threads.
fn for_each_seed<T, F>(seeds: &[u64], jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    if jobs <= 1 {
        return seeds.iter().map(|&s| f(s)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build a {jobs}-thread pool: {e}")))?;
    pool.install(|| {
        use rayon::prelude::*;
        seeds.par_iter().map(|&s| f(s)).collect()
    })
}

#[derive(Serialize)]
struct SplitSummary {
    n: usize,
    group_a: usize,
    group_b: usize,
    positive_rate: f64,
}

fn summarize(d: &dataset::Dataset) -> SplitSummary {
    let (group_a, group_b) = d.group_sizes();
    let positive_rate = d.labels.iter().filter(|&&y| y == 1).count() as f64 / d.n() as f64;
    SplitSummary {
        n: d.n(),
        group_a,
        group_b,
        positive_rate,
    }
}

#[derive(Serialize)]
struct IngestSummary {
    csv: PathBuf,
    schema: PathBuf,
    seed: u64,
    rows_dropped: usize,
    feature_dim: usize,
    feature_names: Vec<String>,
    train: SplitSummary,
    validation: SplitSummary,
    test: SplitSummary,
}

/// Load, clean, split, and encode; persist the recipe and a summary.
pub fn ingest(cfg: &ExperimentConfig, out: &Path, seed: u64) -> Result<()> {
    let splits = load_splits(cfg, seed)?;
    splits.recipe.to_json_file(out.join("recipe.json"))?;
    let summary = IngestSummary {
        csv: cfg.csv.clone(),
        schema: cfg.schema.clone(),
        seed,
        rows_dropped: splits.n_dropped,
        feature_dim: splits.train.dim(),
        feature_names: splits.train.feature_names.clone(),
        train: summarize(&splits.train),
        validation: summarize(&splits.validation),
        test: summarize(&splits.test),
    };
    write_json(&out.join("ingest.json"), &summary)?;
    println!(
        "ingested {} train / {} validation / {} test rows ({} dropped), {} features",
        summary.train.n,
        summary.validation.n,
        summary.test.n,
        summary.rows_dropped,
        summary.feature_dim
    );
    Ok(())
}

/// File-name-safe method key ("general-sigmoid:w=2" -> "general-sigmoid-w2").
fn method_slug(method: &str) -> String {
    method
        .replace(":w=", "-w")
        .replace([':', '=', '/', ' '], "-")
}

fn write_seed_report(out: &Path, method: &str, seed: u64, report: &FairnessReport) -> Result<()> {
    let dir = out.join(method_slug(method));
    write_json(&dir.join(format!("seed_{seed}.json")), report)
}

/// Read every per-seed report under `out`, grouped by method directory.
fn collect_seed_reports(out: &Path) -> Result<Vec<(String, Vec<FairnessReport>)>> {
    let mut groups = Vec::new();
    let mut dirs: Vec<PathBuf> = fs::read_dir(out)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    for dir in dirs {
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("seed_") && n.ends_with(".json"))
            })
            .collect();
        if files.is_empty() {
            continue;
        }
        files.sort();
        let mut reports = Vec::with_capacity(files.len());
        for f in files {
            let text = fs::read_to_string(&f)?;
            reports.push(serde_json::from_str::<FairnessReport>(&text)?);
        }
        reports.sort_by_key(|r| r.seed);
        let name = dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        groups.push((name, reports));
    }
    if groups.is_empty() {
        return Err(Error::Data(format!(
            "no per-seed reports found under {}",
            out.display()
        )));
    }
    Ok(groups)
}

/// Aggregate every method directory under `out` into `aggregate.csv`.
pub fn aggregate_out_dir(out: &Path) -> Result<Vec<AggregateRow>> {
    let groups = collect_seed_reports(out)?;
    let mut rows = Vec::with_capacity(groups.len());
    for (method, reports) in &groups {
        rows.push(report::aggregate(method, reports)?);
    }
    let file = fs::File::create(out.join("aggregate.csv"))?;
    report::write_aggregate_csv(&rows, file)?;
    Ok(rows)
}

/// One (surrogate-entry, seed) sweep cell: select on validation, score on
/// test. `bal` switches every fit to the balanced loop.
fn sweep_method(
    cfg: &ExperimentConfig,
    splits: &IngestedSplits,
    entry: &str,
    seed: u64,
    bal: Option<&BalancedConfig>,
) -> Result<FairnessReport> {
    let cells = cfg.cells_for(entry)?;
    let tcfg = cfg.train_config(seed);
    let sel = select_on_validation(&splits.train, &splits.validation, &cells, &tcfg, bal)?;
    let cfg_sel = TrainConfig {
        rho: sel.candidate.rho,
        ..tcfg
    };
    let lambda = sel.lambda_trace.last().copied().unwrap_or(1.0);
    let split_surrogate =
        fairsurr::surrogates::GroupSplitSurrogate::new(sel.candidate.surrogate, lambda)?;
    report::evaluate(&sel.model, &splits.test, split_surrogate, "test", seed, &cfg_sel)
}

fn unconstrained_report(
    cfg: &ExperimentConfig,
    splits: &IngestedSplits,
    seed: u64,
) -> Result<FairnessReport> {
    let tcfg = TrainConfig {
        rho: 0.0,
        ..cfg.train_config(seed)
    };
    let fit = trainer::train(&splits.train, Surrogate::Linear, &tcfg)?;
    report::evaluate(&fit.model, &splits.test, Surrogate::Linear, "test", seed, &tcfg)
}

/// Penalized training sweep; `balanced` switches on the group-split loop
/// and prefixes method names with "b-".
pub fn train(cfg: &ExperimentConfig, out: &Path, jobs: usize, balanced: bool) -> Result<()> {
    let bal = balanced.then_some(&cfg.balanced);
    for_each_seed(&cfg.seeds, jobs, |seed| {
        let splits = load_splits(cfg, seed)?;
        if !balanced {
            let un = unconstrained_report(cfg, &splits, seed)?;
            write_seed_report(out, "unconstrained", seed, &un)?;
        }
        for entry in &cfg.surrogates {
            let r = sweep_method(cfg, &splits, entry, seed, bal)?;
            let method = if balanced {
                format!("b-{entry}")
            } else {
                entry.clone()
            };
            write_seed_report(out, &method, seed, &r)?;
            println!(
                "seed {seed} {method}: test |ddp|={:.4} acc={:.4} (surrogate {}, rho {})",
                r.ddp_hat_abs, r.accuracy, r.surrogate, r.rho
            );
        }
        Ok(())
    })?;
    let rows = aggregate_out_dir(out)?;
    for r in &rows {
        println!(
            "{}: acc {:.4} +/- {:.4}, |ddp| {:.4} +/- {:.4} (n={})",
            r.method, r.accuracy_mean, r.accuracy_std, r.ddp_hat_abs_mean, r.ddp_hat_abs_std, r.n
        );
    }
    Ok(())
}

/// Export per-cell box-plot statistics of normalized test margins for the
/// unconstrained fit and a strongly penalized linear fit.
pub fn boxplot(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<()> {
    let rho_hi = cfg.boxplot_rho.unwrap_or_else(|| {
        cfg.rho_grid.iter().fold(f64::MIN, |a, &b| a.max(b))
    });
    let variants = [("unconstrained", 0.0), ("linear-penalized", rho_hi)];
    let rates = for_each_seed(&cfg.seeds, jobs, |seed| {
        let splits = load_splits(cfg, seed)?;
        let mut row = Vec::with_capacity(variants.len());
        for (name, rho) in variants {
            let tcfg = TrainConfig {
                rho,
                ..cfg.train_config(seed)
            };
            let fit = trainer::train(&splits.train, Surrogate::Linear, &tcfg)?;
            let margins = metrics::normalized_margins(&fit.model, &splits.test)?;
            let stats = metrics::large_margin_stats(&margins)?;
            let file = fs::File::create(out.join(format!("boxplot_{name}_seed{seed}.csv")))?;
            stats.write_csv(file)?;
            row.push((name, seed, stats.outlier_rate()));
        }
        Ok(row)
    })?;
    let mut w = csv::Writer::from_path(out.join("boxplot_summary.csv"))?;
    w.write_record(["variant", "seed", "outlier_rate"])?;
    for row in &rates {
        for (name, seed, rate) in row {
            w.write_record([name.to_string(), seed.to_string(), rate.to_string()])?;
        }
    }
    w.flush()?;
    for (name, _) in variants {
        let vals: Vec<f64> = rates
            .iter()
            .flatten()
            .filter(|(n, _, _)| *n == name)
            .map(|&(_, _, r)| r)
            .collect();
        let (mean, std) = report::mean_std(&vals);
        println!("{name}: outlier rate {:.4} +/- {:.4}", mean, std);
    }
    Ok(())
}

/// Train Linear and the general sigmoid on the original and each resampled
/// training set; validation and test splits stay untouched.
pub fn resample(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<()> {
    let methods = ["linear", "general-sigmoid"];
    for_each_seed(&cfg.seeds, jobs, |seed| {
        let splits = load_splits(cfg, seed)?;
        let mut variants: Vec<(String, dataset::Dataset)> =
            vec![("original".into(), splits.train.clone())];
        for &mode in &cfg.resample_modes {
            variants.push((
                mode.to_string(),
                dataset::resample_balanced(&splits.train, mode, seed)?,
            ));
        }
        for (variant, train_set) in &variants {
            let resampled = IngestedSplits {
                train: train_set.clone(),
                validation: splits.validation.clone(),
                test: splits.test.clone(),
                recipe: splits.recipe.clone(),
                n_dropped: splits.n_dropped,
            };
            for entry in methods {
                let r = sweep_method(cfg, &resampled, entry, seed, None)?;
                let method = format!("{entry}@{variant}");
                write_seed_report(out, &method, seed, &r)?;
                println!(
                    "seed {seed} {method}: test |ddp|={:.4} acc={:.4}",
                    r.ddp_hat_abs, r.accuracy
                );
            }
        }
        Ok(())
    })?;
    aggregate_out_dir(out)?;
    Ok(())
}

/// Run the verification suite; exit code 4 signals a violation.
pub fn verify(trial: &TrialConfig, out: &Path) -> Result<i32> {
    trial.validate()?;
    let report = verify::run_all(trial)?;
    write_json(&out.join("verify.json"), &report)?;
    for c in &report.checks {
        println!(
            "{}: {} violations / {} trials (worst slack {:+.3e})",
            c.name, c.violations, c.trials, c.worst_slack
        );
    }
    Ok(if report.passed { 0 } else { 4 })
}

/// Rebuild `aggregate.csv` from the per-seed JSONs under `out`.
pub fn report_cmd(out: &Path) -> Result<()> {
    let rows = aggregate_out_dir(out)?;
    for r in &rows {
        println!(
            "{}: acc {:.4} +/- {:.4}, |ddp| {:.4} +/- {:.4} (n={})",
            r.method, r.accuracy_mean, r.accuracy_std, r.ddp_hat_abs_mean, r.ddp_hat_abs_std, r.n
        );
    }
    Ok(())
}

/// Generate a synthetic benchmark table and its schema.
pub fn synth(dataset: SynthDataset, rows: Option<usize>, seed: u64, out: &Path) -> Result<()> {
    let rows = rows.unwrap_or_else(|| dataset.default_rows());
    if rows == 0 {
        return Err(Error::Config("rows must be at least 1".into()));
    }
    let files = dataset.write(rows, seed, out)?;
    println!(
        "wrote {} and {}",
        files.csv.display(),
        files.schema.display()
    );
    Ok(())
}
