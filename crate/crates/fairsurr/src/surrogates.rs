//! Surrogate functions for the positive-prediction indicator.
//!
//! A linear classifier predicts the positive class exactly when its margin
//! d = w.x + b is strictly positive. Fairness penalties replace the
//! non-differentiable indicator 1[d > 0] with a surrogate phi(d); this module
//! collects the surrogate family, its derivatives, and the pointwise gap
//! between each surrogate and the indicator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable ln(1 + exp(x)).
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// The surrogate family.
///
/// `GeneralSigmoid` evaluates sigma(w x) by default; with `odd: true` it
/// evaluates the odd variant 2 sigma(w x) - 1, which passes through the
/// origin and is the form the bound-verification samplers use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Surrogate {
    /// 1[x > 0]. Exact but non-differentiable; rejected by gradient paths.
    Indicator,
    /// phi(x) = x.
    Linear,
    /// phi(x) = max(x + 1, 0).
    Hinge,
    /// phi(x) = sigma(x).
    Sigmoid,
    /// phi(x) = -ln sigma(-x) = softplus(x).
    LogSigmoid,
    /// phi(x) = sigma(w x), or 2 sigma(w x) - 1 when `odd` is set. w > 0.
    GeneralSigmoid { w: f64, odd: bool },
}

impl Surrogate {
    /// General sigmoid in its default (non-odd) form.
    pub fn general_sigmoid(w: f64) -> Result<Self> {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::Config(format!(
                "general sigmoid requires finite w > 0, got {w}"
            )));
        }
        Ok(Surrogate::GeneralSigmoid { w, odd: false })
    }

    /// Odd general sigmoid 2 sigma(w x) - 1.
    pub fn general_sigmoid_odd(w: f64) -> Result<Self> {
        Ok(match Self::general_sigmoid(w)? {
            Surrogate::GeneralSigmoid { w, .. } => Surrogate::GeneralSigmoid { w, odd: true },
            other => other,
        })
    }

    /// Whether [`eval_derivative`] is defined everywhere for this surrogate.
    pub fn differentiable(&self) -> bool {
        !matches!(self, Surrogate::Indicator)
    }
}

/// Evaluate the surrogate at a margin value.
pub fn eval(s: Surrogate, x: f64) -> f64 {
    match s {
        Surrogate::Indicator => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Surrogate::Linear => x,
        Surrogate::Hinge => (x + 1.0).max(0.0),
        Surrogate::Sigmoid => sigmoid(x),
        Surrogate::LogSigmoid => softplus(x),
        Surrogate::GeneralSigmoid { w, odd } => {
            let v = sigmoid(w * x);
            if odd {
                2.0 * v - 1.0
            } else {
                v
            }
        }
    }
}

/// Derivative of the surrogate.
///
/// The hinge is given subderivative 0 at its kink x = -1. The indicator has
/// no derivative and returns a numeric error so optimizer plumbing cannot
/// silently treat it as flat.
pub fn eval_derivative(s: Surrogate, x: f64) -> Result<f64> {
    Ok(match s {
        Surrogate::Indicator => {
            return Err(Error::Numeric(
                "the indicator surrogate is not differentiable".into(),
            ))
        }
        Surrogate::Linear => 1.0,
        Surrogate::Hinge => {
            if x > -1.0 {
                1.0
            } else {
                0.0
            }
        }
        Surrogate::Sigmoid => {
            let v = sigmoid(x);
            v * (1.0 - v)
        }
        Surrogate::LogSigmoid => sigmoid(x),
        Surrogate::GeneralSigmoid { w, odd } => {
            let v = sigmoid(w * x);
            let base = w * v * (1.0 - v);
            if odd {
                2.0 * base
            } else {
                base
            }
        }
    })
}

/// Pointwise gap 1[x > 0] - phi(x) at each input.
pub fn gap_curve(s: Surrogate, xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| eval(Surrogate::Indicator, x) - eval(s, x))
        .collect()
}

/// Gap Q(x) = (1/2) w x - (2 sigma(w x) - 1) between the halved linear
/// surrogate and the odd general sigmoid.
///
/// Q is odd with Q(0) = 0, and since Q'(x) = w/2 - 2 w g(w x) >= 0 (the
/// logistic density g never exceeds 1/4), |Q| is nondecreasing on [0, inf).
pub fn q_gap(w: f64, x: f64) -> f64 {
    0.5 * w * x - (2.0 * sigmoid(w * x) - 1.0)
}

/// Group-split surrogate: group a (z = +1) uses phi1, group b (z = -1) uses
/// lambda * phi1. A plain [`Surrogate`] converts to the split form with
/// lambda = 1, which is arithmetically identical to the unsplit estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSplitSurrogate {
    pub phi1: Surrogate,
    pub lambda: f64,
}

impl GroupSplitSurrogate {
    pub fn new(phi1: Surrogate, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::Config(format!(
                "balance factor must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(GroupSplitSurrogate { phi1, lambda })
    }
}

impl From<Surrogate> for GroupSplitSurrogate {
    fn from(phi1: Surrogate) -> Self {
        GroupSplitSurrogate { phi1, lambda: 1.0 }
    }
}

impl fmt::Display for GroupSplitSurrogate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "group-split({}, lambda={})", self.phi1, self.lambda)
    }
}

impl fmt::Display for Surrogate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Surrogate::Indicator => write!(f, "indicator"),
            Surrogate::Linear => write!(f, "linear"),
            Surrogate::Hinge => write!(f, "hinge"),
            Surrogate::Sigmoid => write!(f, "sigmoid"),
            Surrogate::LogSigmoid => write!(f, "log-sigmoid"),
            Surrogate::GeneralSigmoid { w, odd: false } => write!(f, "general-sigmoid:w={w}"),
            Surrogate::GeneralSigmoid { w, odd: true } => write!(f, "general-sigmoid-odd:w={w}"),
        }
    }
}

impl FromStr for Surrogate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "indicator" => Ok(Surrogate::Indicator),
            "linear" => Ok(Surrogate::Linear),
            "hinge" => Ok(Surrogate::Hinge),
            "sigmoid" => Ok(Surrogate::Sigmoid),
            "log-sigmoid" => Ok(Surrogate::LogSigmoid),
            other => {
                let (name, odd) = if let Some(rest) = other.strip_prefix("general-sigmoid-odd:") {
                    (rest, true)
                } else if let Some(rest) = other.strip_prefix("general-sigmoid:") {
                    (rest, false)
                } else {
                    return Err(Error::Config(format!("unknown surrogate '{other}'")));
                };
                let w = name
                    .strip_prefix("w=")
                    .ok_or_else(|| {
                        Error::Config(format!("expected w=<float> in surrogate '{other}'"))
                    })?
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad w in surrogate '{other}': {e}")))?;
                if odd {
                    Surrogate::general_sigmoid_odd(w)
                } else {
                    Surrogate::general_sigmoid(w)
                }
            }
        }
    }
}
