//! Experiment configuration file shared by the data-driven subcommands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fairsurr::balanced::BalancedConfig;
use fairsurr::dataset::{ResampleMode, SplitSpec};
use fairsurr::report::{self, Candidate};
use fairsurr::trainer::{PenaltyMode, TrainConfig};
use fairsurr::verify::TrialConfig;
use fairsurr::{Error, Result, Surrogate};

/// Split fractions without a seed; the seed comes from the sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.70,
            validation: 0.05,
            test: 0.25,
        }
    }
}

impl SplitFractions {
    pub fn spec(&self, seed: u64) -> Result<SplitSpec> {
        SplitSpec::new(self.train, self.validation, self.test, seed)
    }
}

fn default_surrogates() -> Vec<String> {
    vec![
        "linear".into(),
        "hinge".into(),
        "sigmoid".into(),
        "log-sigmoid".into(),
        "general-sigmoid".into(),
    ]
}

fn default_rho_grid() -> Vec<f64> {
    vec![0.5, 2.0, 5.0, 10.0, 20.0]
}

fn default_w_grid() -> Vec<f64> {
    report::default_w_grid()
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_penalty_mode() -> PenaltyMode {
    PenaltyMode::Squared
}

/// One experiment: a dataset, a split recipe, surrogate grids, and seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Raw CSV table.
    pub csv: PathBuf,
    /// Dataset schema JSON describing columns and the sensitive attribute.
    pub schema: PathBuf,
    #[serde(default)]
    pub split: SplitFractions,
    /// Surrogate names; the bare name "general-sigmoid" sweeps `w_grid`.
    #[serde(default = "default_surrogates")]
    pub surrogates: Vec<String>,
    #[serde(default = "default_rho_grid")]
    pub rho_grid: Vec<f64>,
    #[serde(default = "default_w_grid")]
    pub w_grid: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Squared keeps the penalty's gradient field smooth near zero
    /// disparity, which the sweep grids rely on; absolute and signed are
    /// available for single fits.
    #[serde(default = "default_penalty_mode")]
    pub penalty_mode: PenaltyMode,
    #[serde(default)]
    pub trainer: TrainConfig,
    #[serde(default)]
    pub balanced: BalancedConfig,
    /// Resampling variants compared by `resample`; the original training
    /// set is always included.
    #[serde(default = "default_resample_modes")]
    pub resample_modes: Vec<ResampleMode>,
    /// Penalty coefficient for the constrained box-plot variant; defaults
    /// to the largest grid value.
    #[serde(default)]
    pub boxplot_rho: Option<f64>,
    #[serde(default)]
    pub verify: TrialConfig,
}

fn default_resample_modes() -> Vec<ResampleMode> {
    vec![
        ResampleMode::DownsampleMajority,
        ResampleMode::UpsampleMinorityFull,
    ]
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.surrogates.is_empty() {
            return Err(Error::Config("surrogate list is empty".into()));
        }
        if self.rho_grid.is_empty() {
            return Err(Error::Config("rho grid is empty".into()));
        }
        if self.w_grid.is_empty() {
            return Err(Error::Config("w grid is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &s in &self.seeds {
            if !seen.insert(s) {
                return Err(Error::Config(format!("duplicate seed {s}")));
            }
        }
        for name in &self.surrogates {
            if name != "general-sigmoid" {
                name.parse::<Surrogate>()?;
            }
        }
        self.split.spec(0)?;
        Ok(())
    }

    /// Base training configuration (rho is set per candidate cell).
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            penalty_mode: self.penalty_mode,
            seed,
            ..self.trainer
        }
    }

    /// Expand one surrogate entry into its sweep cells.
    pub fn cells_for(&self, name: &str) -> Result<Vec<Candidate>> {
        if name == "general-sigmoid" {
            report::general_sigmoid_candidates(&self.rho_grid, &self.w_grid, false)
        } else {
            let surrogate: Surrogate = name.parse()?;
            Ok(report::candidates(surrogate, &self.rho_grid))
        }
    }
}
