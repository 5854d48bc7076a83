//! Fairness reports, seed aggregation, and validation-based model
//! selection.
//!
//! A [`FairnessReport`] captures one (model, split) evaluation with enough
//! configuration echo to reproduce it. Aggregation follows the usual
//! mean +/- sample standard deviation convention, and every aggregate is
//! recomputable from the per-seed reports it summarizes.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::balanced::{self, BalancedConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics;
use crate::surrogates::{GroupSplitSurrogate, Surrogate};
use crate::trainer::{self, LinearModel, TrainConfig};

/// One evaluation of a model on a split, with configuration echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub split: String,
    pub seed: u64,
    pub surrogate: String,
    pub rho: f64,
    pub penalty_mode: String,
    /// Balance factor the evaluation surrogate used (1 when unsplit).
    pub lambda: f64,
    pub accuracy: f64,
    pub ddp_hat_abs: f64,
    pub ddp_tilde: f64,
    pub cov_hat: f64,
    pub gap: f64,
    pub large_margin_rate: f64,
}

/// Evaluate a model on one split.
pub fn evaluate(
    model: &LinearModel,
    data: &Dataset,
    s: impl Into<GroupSplitSurrogate>,
    split: &str,
    seed: u64,
    cfg: &TrainConfig,
) -> Result<FairnessReport> {
    let s = s.into();
    let m = metrics::margins(model, data)?;
    Ok(FairnessReport {
        split: split.to_string(),
        seed,
        surrogate: s.phi1.to_string(),
        rho: cfg.rho,
        penalty_mode: cfg.penalty_mode.to_string(),
        lambda: s.lambda,
        accuracy: metrics::accuracy(&m)?,
        ddp_hat_abs: metrics::ddp_hat_from(&m)?.abs(),
        ddp_tilde: metrics::ddp_tilde(&m, s)?,
        cov_hat: metrics::cov_hat(&m, s.phi1)?,
        gap: metrics::gap(&m, s.phi1)?,
        large_margin_rate: metrics::large_margin_stats(&m)?.outlier_rate(),
    })
}

/// Mean and sample (n-1) standard deviation; a single value has deviation 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Mean +/- deviation summary of one method's reports across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub n: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub ddp_hat_abs_mean: f64,
    pub ddp_hat_abs_std: f64,
}

/// Aggregate per-seed reports for one method.
pub fn aggregate(method: &str, reports: &[FairnessReport]) -> Result<AggregateRow> {
    if reports.is_empty() {
        return Err(Error::Data(format!(
            "no reports to aggregate for method {method:?}"
        )));
    }
    let acc: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
    let ddp: Vec<f64> = reports.iter().map(|r| r.ddp_hat_abs).collect();
    let (accuracy_mean, accuracy_std) = mean_std(&acc);
    let (ddp_hat_abs_mean, ddp_hat_abs_std) = mean_std(&ddp);
    Ok(AggregateRow {
        method: method.to_string(),
        n: reports.len(),
        accuracy_mean,
        accuracy_std,
        ddp_hat_abs_mean,
        ddp_hat_abs_std,
    })
}

/// Write aggregate rows as CSV (one row per method).
pub fn write_aggregate_csv(rows: &[AggregateRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "n",
        "accuracy_mean",
        "accuracy_std",
        "ddp_hat_abs_mean",
        "ddp_hat_abs_std",
    ])?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.n.to_string(),
            r.accuracy_mean.to_string(),
            r.accuracy_std.to_string(),
            r.ddp_hat_abs_mean.to_string(),
            r.ddp_hat_abs_std.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The default penalty-coefficient grid: 0.1, 0.2, ..., 5.0.
pub fn default_rho_grid() -> Vec<f64> {
    (1..=50).map(|i| i as f64 / 10.0).collect()
}

/// The default general-sigmoid slope grid.
pub fn default_w_grid() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0, 16.0]
}

/// One hyperparameter cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub surrogate: Surrogate,
    pub rho: f64,
}

/// Cells for a plain surrogate: one per rho.
pub fn candidates(surrogate: Surrogate, rhos: &[f64]) -> Vec<Candidate> {
    rhos.iter()
        .map(|&rho| Candidate { surrogate, rho })
        .collect()
}

/// Cells for the general sigmoid: the (rho, w) cross product.
pub fn general_sigmoid_candidates(rhos: &[f64], ws: &[f64], odd: bool) -> Result<Vec<Candidate>> {
    let mut out = Vec::with_capacity(rhos.len() * ws.len());
    for &w in ws {
        let surrogate = if odd {
            Surrogate::general_sigmoid_odd(w)?
        } else {
            Surrogate::general_sigmoid(w)?
        };
        for &rho in rhos {
            out.push(Candidate { surrogate, rho });
        }
    }
    Ok(out)
}

/// Winner of a validation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Selected {
    pub model: LinearModel,
    pub candidate: Candidate,
    /// Balance-factor trace when the candidate was trained with the
    /// balanced loop; empty otherwise.
    pub lambda_trace: Vec<f64>,
    pub validation: FairnessReport,
}

fn fit_candidate(
    train: &Dataset,
    c: &Candidate,
    tcfg: &TrainConfig,
    bal: Option<&BalancedConfig>,
) -> Result<(LinearModel, Vec<f64>)> {
    let cfg = TrainConfig { rho: c.rho, ..*tcfg };
    match bal {
        None => Ok((trainer::train(train, c.surrogate, &cfg)?.model, Vec::new())),
        Some(bcfg) => {
            let out = balanced::run(train, c.surrogate, bcfg, &cfg)?;
            Ok((out.model, out.lambda_trace))
        }
    }
}

/// Train every candidate and keep the one with the smallest validation
/// |DDP|, tie-broken by higher validation accuracy (first winner kept on an
/// exact double tie). With `bal` set, each cell runs the balanced loop
/// instead of a single penalized fit.
pub fn select_on_validation(
    train: &Dataset,
    validation: &Dataset,
    cands: &[Candidate],
    tcfg: &TrainConfig,
    bal: Option<&BalancedConfig>,
) -> Result<Selected> {
    if cands.is_empty() {
        return Err(Error::Config("empty candidate grid".into()));
    }
    let mut best: Option<Selected> = None;
    for c in cands {
        let (model, lambda_trace) = fit_candidate(train, c, tcfg, bal)?;
        let cfg = TrainConfig { rho: c.rho, ..*tcfg };
        let lambda = lambda_trace.last().copied().unwrap_or(1.0);
        let s = GroupSplitSurrogate::new(c.surrogate, lambda)?;
        let report = evaluate(&model, validation, s, "validation", tcfg.seed, &cfg)?;
        let better = match &best {
            None => true,
            Some(b) => {
                report.ddp_hat_abs < b.validation.ddp_hat_abs
                    || (report.ddp_hat_abs == b.validation.ddp_hat_abs
                        && report.accuracy > b.validation.accuracy)
            }
        };
        if better {
            best = Some(Selected {
                model,
                candidate: *c,
                lambda_trace,
                validation: report,
            });
        }
    }
    Ok(best.expect("grid is nonempty"))
}
