//! Balanced surrogates: a fixed-point loop that reweights the protected
//! group's surrogate term so the relaxed disparity tracks the true one.
//!
//! The relaxed disparity systematically under- or over-counts one group
//! whenever the surrogate is a poor pointwise match for the indicator on
//! that group's margins. The loop alternates between solving the penalized
//! problem with the current balance factor and re-solving the factor in
//! closed form so that, at the current margins, the split relaxation equals
//! the exact disparity. Exponential smoothing keeps the iteration stable.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{self, MarginSet};
use crate::report::{self, FairnessReport};
use crate::surrogates::{GroupSplitSurrogate, Surrogate};
use crate::trainer::{self, LinearModel, TrainConfig};

/// Knobs for the balance-factor iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalancedConfig {
    /// Initial balance factor.
    pub lambda0: f64,
    /// Smoothing weight on the newly solved factor, in [0, 1].
    pub alpha: f64,
    /// Termination threshold on |lambda_t - lambda_{t-1}|.
    pub eta: f64,
    /// Maximum number of iterations.
    pub tau: usize,
    /// Restart every inner solve from the unconstrained solution instead of
    /// chaining warm starts.
    pub strict_restart: bool,
}

impl Default for BalancedConfig {
    fn default() -> Self {
        BalancedConfig {
            lambda0: 1.0,
            alpha: 0.9,
            eta: 0.01,
            tau: 50,
            strict_restart: false,
        }
    }
}

impl BalancedConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda0.is_finite() || self.lambda0 < 0.0 {
            return Err(Error::Config(format!(
                "lambda0 must be finite and nonnegative, got {}",
                self.lambda0
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(Error::Config(format!(
                "eta must be finite and positive, got {}",
                self.eta
            )));
        }
        if self.tau == 0 {
            return Err(Error::Config("tau must be at least 1".into()));
        }
        Ok(())
    }
}

/// Why the loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// |lambda_t - lambda_{t-1}| fell to eta or below.
    Threshold,
    /// tau iterations ran without meeting the threshold.
    MaxIter,
    /// The solved factor was nonpositive (or its denominator vanished);
    /// lambda was reset to 1 and the last solved model kept.
    LambdaNonPositive,
}

/// Outcome of the balanced loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancedResult {
    pub model: LinearModel,
    /// lambda_0, lambda_1, ..., lambda_T; always iterations + 1 entries,
    /// every entry nonnegative.
    pub lambda_trace: Vec<f64>,
    pub iterations: usize,
    pub terminated_by: Termination,
    /// Training-split evaluation after each inner solve, in iteration
    /// order; reports[t].lambda is the factor that solve used.
    pub reports: Vec<FairnessReport>,
}

/// Solve for the balance factor that makes the split relaxation match the
/// exact disparity at the given margins:
///
/// lambda = (Nb * sum_{z=+1} phi1(d_i) - (N1a*N0b - N0a*N1b))
///        / (Na * sum_{z=-1} phi1(d_i))
///
/// Errors with a numeric error when the denominator vanishes or the
/// quotient is not finite.
pub fn solve_lambda(m: &MarginSet, phi1: Surrogate) -> Result<f64> {
    let counts = metrics::group_counts(m)?;
    let (na, nb) = (counts.na() as f64, counts.nb() as f64);
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    for (&d, &z) in m.margins.iter().zip(&m.sensitive) {
        let v = crate::surrogates::eval(phi1, d);
        if z == 1 {
            sum_a += v;
        } else {
            sum_b += v;
        }
    }
    let cross = (counts.n1a * counts.n0b) as f64 - (counts.n0a * counts.n1b) as f64;
    let denominator = na * sum_b;
    if denominator == 0.0 {
        return Err(Error::Numeric(
            "balance factor is singular: the surrogate sums to zero on the protected group".into(),
        ));
    }
    let lambda = (nb * sum_a - cross) / denominator;
    if !lambda.is_finite() {
        return Err(Error::Numeric(format!(
            "balance factor is not finite (numerator {}, denominator {})",
            nb * sum_a - cross,
            denominator
        )));
    }
    Ok(lambda)
}

/// Exponential smoothing step: alpha * solved + (1 - alpha) * previous.
pub fn smooth(lambda_prev: f64, lambda_solved: f64, alpha: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha));
    alpha * lambda_solved + (1.0 - alpha) * lambda_prev
}

/// Run the balanced loop: train with the current factor, re-solve the
/// factor on the training margins, smooth, repeat until the factor settles,
/// the iteration budget runs out, or the solved factor turns nonpositive.
///
/// Margins and counts are always taken on `data`, the training split. A
/// nonpositive or singular factor resets lambda to 1 and terminates
/// immediately, keeping the model trained with the previous factor.
pub fn run(
    data: &Dataset,
    phi1: Surrogate,
    bcfg: &BalancedConfig,
    tcfg: &TrainConfig,
) -> Result<BalancedResult> {
    bcfg.validate()?;
    tcfg.validate()?;
    data.validate()?;
    if !phi1.differentiable() {
        return Err(Error::Numeric(format!(
            "balanced training requires a differentiable surrogate, got {phi1}"
        )));
    }

    // Unconstrained warm start shared by both restart policies.
    let unconstrained = TrainConfig { rho: 0.0, ..*tcfg };
    let theta0 = trainer::train(data, phi1, &unconstrained)?.model;

    let mut current = theta0.clone();
    let mut lambda_prev = bcfg.lambda0;
    let mut lambda_trace = vec![bcfg.lambda0];
    let mut reports = Vec::new();
    let mut iterations = 0;
    let mut terminated_by = Termination::MaxIter;

    for t in 1..=bcfg.tau {
        let start = if bcfg.strict_restart {
            theta0.clone()
        } else {
            current.clone()
        };
        let split = GroupSplitSurrogate::new(phi1, lambda_prev)?;
        current = trainer::train_from(data, split, tcfg, start)?.model;
        iterations = t;
        let m = metrics::margins(&current, data)?;
        reports.push(report::evaluate(
            &current,
            data,
            split,
            "train",
            tcfg.seed,
            tcfg,
        )?);

        let lambda_solved = match solve_lambda(&m, phi1) {
            Ok(l) => l,
            Err(Error::Numeric(_)) => {
                lambda_trace.push(1.0);
                terminated_by = Termination::LambdaNonPositive;
                break;
            }
            Err(e) => return Err(e),
        };
        let lambda_t = smooth(lambda_prev, lambda_solved, bcfg.alpha);
        if lambda_t <= 0.0 {
            lambda_trace.push(1.0);
            terminated_by = Termination::LambdaNonPositive;
            break;
        }
        lambda_trace.push(lambda_t);
        let delta = (lambda_t - lambda_prev).abs();
        lambda_prev = lambda_t;
        if delta <= bcfg.eta {
            terminated_by = Termination::Threshold;
            break;
        }
    }

    Ok(BalancedResult {
        model: current,
        lambda_trace,
        iterations,
        terminated_by,
        reports,
    })
}
