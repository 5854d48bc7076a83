//! `fairsurr`: dataset ingestion, fairness-penalized training sweeps,
//! balanced-surrogate runs, resampling comparisons, margin box-plot
//! exports, and randomized verification of the identities and bounds the
//! penalties rely on.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 training error,
//! 4 verification violation.

mod config;
mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use fairsurr::synth::SynthDataset;
use fairsurr::trainer::PenaltyMode;
use fairsurr::verify::TrialConfig;
use fairsurr::Result;

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "fairsurr", version, about, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the experiment subcommands.
#[derive(Args)]
struct ExperimentArgs {
    /// Experiment configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; all writes land here.
    #[arg(long)]
    out: PathBuf,
    /// Replace the configured seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the configured surrogate list with this single surrogate
    /// (indicator, linear, hinge, sigmoid, log-sigmoid,
    /// general-sigmoid:w=<float>, or bare general-sigmoid to sweep w).
    #[arg(long)]
    surrogate: Option<String>,
    /// Replace the configured rho grid with this single value.
    #[arg(long)]
    rho: Option<f64>,
    /// Penalty mode: signed, absolute, or squared.
    #[arg(long)]
    mode: Option<String>,
    /// Worker threads for independent seeds (default 1).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl ExperimentArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_json_file(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(ref surrogate) = self.surrogate {
            cfg.surrogates = vec![surrogate.clone()];
        }
        if let Some(rho) = self.rho {
            cfg.rho_grid = vec![rho];
        }
        if let Some(ref mode) = self.mode {
            cfg.penalty_mode = mode.parse::<PenaltyMode>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load a CSV and schema, clean and encode it, and persist the
    /// encoding recipe plus a split summary.
    Ingest(ExperimentArgs),
    /// Validation-selected penalized training sweep; writes per-seed report
    /// JSONs and an aggregate CSV.
    Train(ExperimentArgs),
    /// Training sweep with the balanced group-split loop retuning the
    /// group-b weight between fits.
    Balanced(ExperimentArgs),
    /// Export per-cell box-plot statistics of normalized test margins for
    /// the unconstrained and strongly penalized linear fits.
    Boxplot(ExperimentArgs),
    /// Compare original against group-rebalanced training sets with the
    /// linear and general-sigmoid surrogates.
    Resample(ExperimentArgs),
    /// Run the randomized identity, bound, and moment checks.
    Verify(VerifyArgs),
    /// Rebuild the aggregate CSV from per-seed report JSONs already on
    /// disk.
    Report(ReportArgs),
    /// Generate a synthetic benchmark table and matching schema.
    Synth(SynthArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Experiment configuration JSON; its "verify" section configures the
    /// checks. Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for verify.json.
    #[arg(long)]
    out: PathBuf,
    /// Override the check seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trial budget per check.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding per-seed report JSONs (as written by train,
    /// balanced, or resample).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Which table to generate: adult-like, bank-like, or compas-like.
    #[arg(long)]
    dataset: String,
    /// Row count; defaults to the mirrored benchmark's size.
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the CSV and schema.
    #[arg(long)]
    out: PathBuf,
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Ingest(args) => {
            let cfg = args.load()?;
            run::ensure_out(&args.out)?;
            run::ingest(&cfg, &args.out, *cfg.seeds.first().unwrap_or(&0))?;
            Ok(0)
        }
        Command::Train(args) => {
            let cfg = args.load()?;
            run::ensure_out(&args.out)?;
            run::train(&cfg, &args.out, args.jobs, false)?;
            Ok(0)
        }
        Command::Balanced(args) => {
            let cfg = args.load()?;
            run::ensure_out(&args.out)?;
            run::train(&cfg, &args.out, args.jobs, true)?;
            Ok(0)
        }
        Command::Boxplot(args) => {
            let cfg = args.load()?;
            run::ensure_out(&args.out)?;
            run::boxplot(&cfg, &args.out, args.jobs)?;
            Ok(0)
        }
        Command::Resample(args) => {
            let cfg = args.load()?;
            run::ensure_out(&args.out)?;
            run::resample(&cfg, &args.out, args.jobs)?;
            Ok(0)
        }
        Command::Verify(args) => {
            let mut trial = match &args.config {
                Some(path) => ExperimentConfig::from_json_file(path)?.verify,
                None => TrialConfig::default(),
            };
            if let Some(seed) = args.seed {
                trial.seed = seed;
            }
            if let Some(trials) = args.trials {
                trial.trials = trials;
            }
            run::ensure_out(&args.out)?;
            run::verify(&trial, &args.out)
        }
        Command::Report(args) => {
            run::report_cmd(&args.out)?;
            Ok(0)
        }
        Command::Synth(args) => {
            let dataset: SynthDataset = args.dataset.parse()?;
            run::ensure_out(&args.out)?;
            run::synth(dataset, args.rows, args.seed, &args.out)?;
            Ok(0)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
