//! Full-batch gradient descent for logistic loss plus a surrogate fairness
//! penalty.
//!
//! The objective is
//!
//! ```text
//! (1/N) sum_i loss(d_i, y_i) + rho * pen(ddp_tilde) + (wd/2) ||w||^2
//! ```
//!
//! where d_i = w.x_i + b, pen is the identity, absolute value, or square of
//! the surrogate DDP estimate depending on [`PenaltyMode`], and weight decay
//! defaults to 0. Optimization is plain full-batch descent with backtracking
//! line search, which keeps runs deterministic and objective traces
//! comparable across configurations.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics;
use crate::surrogates::{self, sigmoid, softplus, GroupSplitSurrogate};

/// A linear classifier d(x) = w.x + b; predicts 1 exactly when d > 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Array1<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        LinearModel {
            weights: Array1::zeros(dim),
            bias: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !w.is_finite()) || !self.bias.is_finite() {
            return Err(Error::Numeric("model has non-finite entries".into()));
        }
        Ok(())
    }

    fn check_dim(&self, data: &Dataset) -> Result<()> {
        if self.dim() != data.dim() {
            return Err(Error::Data(format!(
                "model dimension {} does not match feature dimension {}",
                self.dim(),
                data.dim()
            )));
        }
        Ok(())
    }

    /// Margins d_i = w.x_i + b for every row.
    pub fn margins(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_dim(data)?;
        let d = data.features.dot(&self.weights) + self.bias;
        Ok(d.to_vec())
    }

    /// Predicted labels in {0, 1}; 1 exactly when the margin is positive.
    pub fn predict(&self, features: &Array2<f64>) -> Result<Vec<u8>> {
        if self.dim() != features.ncols() {
            return Err(Error::Data(format!(
                "model dimension {} does not match feature dimension {}",
                self.dim(),
                features.ncols()
            )));
        }
        let d = features.dot(&self.weights) + self.bias;
        Ok(d.iter().map(|&v| u8::from(v > 0.0)).collect())
    }
}

/// How the surrogate DDP estimate enters the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMode {
    /// rho * ddp_tilde. Unbounded below with unbounded surrogates; kept for
    /// fidelity experiments.
    Signed,
    /// rho * |ddp_tilde|.
    Absolute,
    /// rho * ddp_tilde^2.
    Squared,
}

impl std::fmt::Display for PenaltyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PenaltyMode::Signed => "signed",
            PenaltyMode::Absolute => "absolute",
            PenaltyMode::Squared => "squared",
        })
    }
}

impl std::str::FromStr for PenaltyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "signed" => Ok(PenaltyMode::Signed),
            "absolute" => Ok(PenaltyMode::Absolute),
            "squared" => Ok(PenaltyMode::Squared),
            other => Err(Error::Config(format!(
                "unknown penalty mode {other:?} (expected signed, absolute, or squared)"
            ))),
        }
    }
}

fn pen_value(dt: f64, mode: PenaltyMode) -> f64 {
    match mode {
        PenaltyMode::Signed => dt,
        PenaltyMode::Absolute => dt.abs(),
        PenaltyMode::Squared => dt * dt,
    }
}

/// Derivative of the penalty in its argument; the absolute mode uses
/// sign(0) = 0 so an exactly fair margin set exerts no pressure.
fn pen_derivative(dt: f64, mode: PenaltyMode) -> f64 {
    match mode {
        PenaltyMode::Signed => 1.0,
        PenaltyMode::Absolute => {
            if dt > 0.0 {
                1.0
            } else if dt < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        PenaltyMode::Squared => 2.0 * dt,
    }
}

/// Weight initialization for [`train`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Zeros,
    /// Independent N(0, scale^2) weights; the bias starts at 0.
    Gaussian { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Penalty coefficient rho >= 0; 0 trains the unconstrained baseline.
    pub rho: f64,
    pub penalty_mode: PenaltyMode,
    /// Initial step size for the backtracking line search.
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop when the full gradient norm falls to this value.
    pub grad_tolerance: f64,
    /// L2 coefficient on the weights (bias excluded); defaults to 0.
    pub weight_decay: f64,
    pub seed: u64,
    pub init: Init,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            rho: 0.0,
            penalty_mode: PenaltyMode::Absolute,
            learning_rate: 1.0,
            max_epochs: 500,
            grad_tolerance: 1e-6,
            weight_decay: 0.0,
            seed: 0,
            init: Init::Zeros,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::Config(format!(
                "rho must be finite and nonnegative, got {}",
                self.rho
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.grad_tolerance > 0.0) {
            return Err(Error::Config(format!(
                "gradient tolerance must be positive, got {}",
                self.grad_tolerance
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config(format!(
                "weight decay must be nonnegative, got {}",
                self.weight_decay
            )));
        }
        if let Init::Gaussian { scale } = self.init {
            if !(scale > 0.0) || !scale.is_finite() {
                return Err(Error::Config(format!(
                    "gaussian init scale must be finite and positive, got {scale}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub model: LinearModel,
    /// Accepted descent steps.
    pub epochs_run: usize,
    pub final_objective: f64,
    /// True exactly when the gradient-norm tolerance was reached.
    pub converged: bool,
    /// Objective after initialization and after each accepted step.
    pub objective_trace: Vec<f64>,
}

/// Mean logistic loss of the model on the dataset, overflow-safe: for
/// labels y in {0, 1}, loss = softplus(d) - y d.
pub fn logistic_loss(model: &LinearModel, data: &Dataset) -> Result<f64> {
    model.check_dim(data)?;
    let d = model.margins(data)?;
    Ok(loss_from_margins(&d, &data.labels))
}

fn loss_from_margins(margins: &[f64], labels: &[u8]) -> f64 {
    let mut acc = 0.0;
    for (&d, &y) in margins.iter().zip(labels) {
        acc += softplus(d) - f64::from(y) * d;
    }
    acc / margins.len() as f64
}

fn objective_from_margins(
    margins: &[f64],
    model: &LinearModel,
    data: &Dataset,
    s: GroupSplitSurrogate,
    cfg: &TrainConfig,
) -> Result<f64> {
    let mut obj = loss_from_margins(margins, &data.labels);
    if cfg.rho > 0.0 {
        let dt = metrics::ddp_tilde_slices(margins, &data.sensitive, s.phi1, s.lambda)?;
        obj += cfg.rho * pen_value(dt, cfg.penalty_mode);
    }
    if cfg.weight_decay > 0.0 {
        obj += 0.5 * cfg.weight_decay * model.weights.iter().map(|w| w * w).sum::<f64>();
    }
    Ok(obj)
}

/// Penalized objective: logistic loss + rho * pen(ddp_tilde) (+ optional
/// weight decay).
pub fn objective(
    model: &LinearModel,
    data: &Dataset,
    s: impl Into<GroupSplitSurrogate>,
    cfg: &TrainConfig,
) -> Result<f64> {
    cfg.validate()?;
    let d = model.margins(data)?;
    objective_from_margins(&d, model, data, s.into(), cfg)
}

/// Analytic gradient of [`objective`] in (weights, bias).
///
/// Row reductions run in a fixed sequential order so results are bit-stable.
pub fn gradient(
    model: &LinearModel,
    data: &Dataset,
    s: impl Into<GroupSplitSurrogate>,
    cfg: &TrainConfig,
) -> Result<(Array1<f64>, f64)> {
    cfg.validate()?;
    let s = s.into();
    model.check_dim(data)?;
    if cfg.rho > 0.0 && !s.phi1.differentiable() {
        return Err(Error::Numeric(format!(
            "surrogate {} is not differentiable; it cannot be trained against",
            s.phi1
        )));
    }
    let n = data.n();
    let d = model.margins(data)?;

    let mut gw = Array1::<f64>::zeros(model.dim());
    let mut gb = 0.0;
    for i in 0..n {
        let coef = sigmoid(d[i]) - f64::from(data.labels[i]);
        gw.scaled_add(coef, &data.features.row(i));
        gb += coef;
    }
    let inv_n = 1.0 / n as f64;
    gw *= inv_n;
    gb *= inv_n;

    if cfg.rho > 0.0 {
        let dt = metrics::ddp_tilde_slices(&d, &data.sensitive, s.phi1, s.lambda)?;
        let c = cfg.rho * pen_derivative(dt, cfg.penalty_mode);
        if c != 0.0 {
            let (na, nb) = data.group_sizes();
            let mut pw = Array1::<f64>::zeros(model.dim());
            let mut pb = 0.0;
            let (wa, wb) = (c / na as f64, -c * s.lambda / nb as f64);
            for i in 0..n {
                let side = if data.sensitive[i] == 1 { wa } else { wb };
                let coef = side * surrogates::eval_derivative(s.phi1, d[i])?;
                pw.scaled_add(coef, &data.features.row(i));
                pb += coef;
            }
            gw += &pw;
            gb += pb;
        }
    }

    if cfg.weight_decay > 0.0 {
        gw.scaled_add(cfg.weight_decay, &model.weights);
    }
    Ok((gw, gb))
}

fn init_model(dim: usize, cfg: &TrainConfig) -> LinearModel {
    match cfg.init {
        Init::Zeros => LinearModel::zeros(dim),
        Init::Gaussian { scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let weights =
                Array1::from_iter((0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)));
            LinearModel { weights, bias: 0.0 }
        }
    }
}

const ARMIJO: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MIN_STEP: f64 = 1e-14;

/// Train from the configured initialization.
pub fn train(
    data: &Dataset,
    s: impl Into<GroupSplitSurrogate>,
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    cfg.validate()?;
    train_from(data, s, cfg, init_model(data.dim(), cfg))
}

/// Train from an explicit starting model (warm start).
pub fn train_from(
    data: &Dataset,
    s: impl Into<GroupSplitSurrogate>,
    cfg: &TrainConfig,
    model0: LinearModel,
) -> Result<TrainResult> {
    cfg.validate()?;
    data.validate()?;
    model0.validate()?;
    let s: GroupSplitSurrogate = s.into();
    if cfg.rho > 0.0 && !s.phi1.differentiable() {
        return Err(Error::Numeric(format!(
            "surrogate {} is not differentiable; it cannot be trained against",
            s.phi1
        )));
    }

    let mut model = model0;
    let d = model.margins(data)?;
    let mut obj = objective_from_margins(&d, &model, data, s, cfg)?;
    if !obj.is_finite() {
        return Err(Error::Diverged { trace: vec![obj] });
    }
    let mut trace = vec![obj];
    let mut converged = false;
    let mut epochs_run = 0;

    for _ in 0..cfg.max_epochs {
        let (gw, gb) = gradient(&model, data, s, cfg)?;
        if gw.iter().any(|g| !g.is_finite()) || !gb.is_finite() {
            return Err(Error::Diverged { trace });
        }
        let g2 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        if g2.sqrt() <= cfg.grad_tolerance {
            converged = true;
            break;
        }

        let mut step = cfg.learning_rate;
        let mut accepted = false;
        while step >= MIN_STEP {
            let cand = LinearModel {
                weights: &model.weights - &(step * &gw),
                bias: model.bias - step * gb,
            };
            let cd = cand.margins(data)?;
            let cand_obj = objective_from_margins(&cd, &cand, data, s, cfg)?;
            if cand_obj.is_finite() && cand_obj <= obj - ARMIJO * step * g2 {
                model = cand;
                obj = cand_obj;
                accepted = true;
                break;
            }
            step *= BACKTRACK;
        }
        if !accepted {
            // The line search found no acceptable step; the iterate is at
            // the resolution limit of the objective.
            break;
        }
        epochs_run += 1;
        trace.push(obj);
    }

    Ok(TrainResult {
        model,
        epochs_run,
        final_objective: obj,
        converged,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogates::Surrogate;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn toy_dataset() -> Dataset {
        // 12 rows, 3 features, both groups and both labels present.
        let features = array![
            [0.5, -1.2, 0.3],
            [1.5, 0.2, -0.7],
            [-0.3, 0.8, 1.1],
            [0.9, -0.4, -1.3],
            [-1.1, 0.6, 0.2],
            [0.4, 1.3, -0.5],
            [-0.8, -0.9, 0.7],
            [1.2, 0.1, 0.9],
            [-0.2, -1.5, -0.4],
            [0.7, 0.5, 1.4],
            [-1.4, 0.3, -0.6],
            [0.1, -0.7, 0.8],
        ];
        Dataset {
            features,
            labels: vec![1, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 0],
            sensitive: vec![1, 1, 1, 1, 1, 1, -1, -1, -1, -1, -1, -1],
            feature_names: vec!["f0".into(), "f1".into(), "f2".into()],
            n_dropped: 0,
        }
    }

    #[test]
    fn margins_match_row_by_row_dot_products() {
        let data = toy_dataset();
        let model = LinearModel {
            weights: array![0.3, -1.1, 0.45],
            bias: -0.2,
        };
        let d = model.margins(&data).unwrap();
        for i in 0..data.n() {
            let mut want = model.bias;
            for j in 0..data.dim() {
                want += model.weights[j] * data.features[(i, j)];
            }
            assert_abs_diff_eq!(d[i], want, epsilon = 1e-12);
        }

        let zero = LinearModel::zeros(3);
        assert!(zero.margins(&data).unwrap().iter().all(|&v| v == 0.0));

        let bad = LinearModel::zeros(2);
        assert!(bad.margins(&data).is_err());
    }

    #[test]
    fn single_feature_margin_example() {
        let data = Dataset {
            features: array![[3.0, 5.0], [0.0, 0.0]],
            labels: vec![1, 0],
            sensitive: vec![1, -1],
            feature_names: vec!["a".into(), "b".into()],
            n_dropped: 0,
        };
        let model = LinearModel {
            weights: array![1.0, 0.0],
            bias: -1.0,
        };
        assert_eq!(model.margins(&data).unwrap(), vec![2.0, -1.0]);
    }

    #[test]
    fn predict_ties_go_negative_and_match_margins() {
        let data = toy_dataset();
        let model = LinearModel {
            weights: array![0.3, -1.1, 0.45],
            bias: -0.2,
        };
        let preds = model.predict(&data.features).unwrap();
        let margins = model.margins(&data).unwrap();
        for (p, d) in preds.iter().zip(&margins) {
            assert_eq!(*p == 1, *d > 0.0);
        }
        let zero = LinearModel::zeros(3);
        assert!(zero.predict(&data.features).unwrap().iter().all(|&p| p == 0));
    }

    #[test]
    fn zero_model_loss_is_ln_two() {
        let data = toy_dataset();
        let loss = logistic_loss(&LinearModel::zeros(3), &data).unwrap();
        assert_abs_diff_eq!(loss, std::f64::consts::LN_2, epsilon = 1e-15);
    }

    #[test]
    fn loss_matches_naive_per_row_formula() {
        let data = toy_dataset();
        let model = LinearModel {
            weights: array![0.9, -0.3, 0.5],
            bias: 0.1,
        };
        let got = logistic_loss(&model, &data).unwrap();
        let d = model.margins(&data).unwrap();
        let naive: f64 = d
            .iter()
            .zip(&data.labels)
            .map(|(&di, &y)| {
                let p = 1.0 / (1.0 + (-di).exp());
                -(f64::from(y) * p.ln() + (1.0 - f64::from(y)) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / data.n() as f64;
        assert_abs_diff_eq!(got, naive, epsilon = 1e-12);
    }

    #[test]
    fn separable_loss_decreases_with_scale() {
        let data = Dataset {
            features: array![[1.0, 0.1], [-1.0, -0.1]],
            labels: vec![1, 0],
            sensitive: vec![1, -1],
            feature_names: vec!["a".into(), "b".into()],
            n_dropped: 0,
        };
        let mut prev = f64::INFINITY;
        for scale in [1.0, 10.0, 100.0] {
            let model = LinearModel {
                weights: array![scale, 0.0],
                bias: 0.0,
            };
            let loss = logistic_loss(&model, &data).unwrap();
            assert!(loss < prev, "loss should fall with scale");
            prev = loss;
        }
    }

    #[test]
    fn objective_modes_match_hand_formulas() {
        let data = toy_dataset();
        let model = LinearModel {
            weights: array![0.2, 0.4, -0.6],
            bias: 0.3,
        };
        let loss = logistic_loss(&model, &data).unwrap();
        let m = metrics::margins(&model, &data).unwrap();
        let dt = metrics::ddp_tilde(&m, Surrogate::Sigmoid).unwrap();

        let mut cfg = TrainConfig {
            rho: 0.0,
            ..TrainConfig::default()
        };
        assert_eq!(
            objective(&model, &data, Surrogate::Sigmoid, &cfg).unwrap(),
            loss
        );

        cfg.rho = 1.5;
        cfg.penalty_mode = PenaltyMode::Absolute;
        assert_abs_diff_eq!(
            objective(&model, &data, Surrogate::Sigmoid, &cfg).unwrap(),
            loss + 1.5 * dt.abs(),
            epsilon = 1e-12
        );

        cfg.penalty_mode = PenaltyMode::Squared;
        assert_abs_diff_eq!(
            objective(&model, &data, Surrogate::Sigmoid, &cfg).unwrap(),
            loss + 1.5 * dt * dt,
            epsilon = 1e-12
        );

        cfg.penalty_mode = PenaltyMode::Signed;
        assert_abs_diff_eq!(
            objective(&model, &data, Surrogate::Sigmoid, &cfg).unwrap(),
            loss + 1.5 * dt,
            epsilon = 1e-12
        );
    }

    fn central_difference_gradient(
        model: &LinearModel,
        data: &Dataset,
        s: GroupSplitSurrogate,
        cfg: &TrainConfig,
    ) -> (Array1<f64>, f64) {
        let h = 1e-6;
        let mut gw = Array1::zeros(model.dim());
        for j in 0..model.dim() {
            let mut plus = model.clone();
            plus.weights[j] += h;
            let mut minus = model.clone();
            minus.weights[j] -= h;
            gw[j] = (objective(&plus, data, s, cfg).unwrap()
                - objective(&minus, data, s, cfg).unwrap())
                / (2.0 * h);
        }
        let mut plus = model.clone();
        plus.bias += h;
        let mut minus = model.clone();
        minus.bias -= h;
        let gb = (objective(&plus, data, s, cfg).unwrap()
            - objective(&minus, data, s, cfg).unwrap())
            / (2.0 * h);
        (gw, gb)
    }

    #[test]
    fn gradient_matches_central_differences() {
        let data = toy_dataset();
        let model = LinearModel {
            weights: array![0.31, -0.22, 0.17],
            bias: 0.05,
        };
        let surrogates = [
            Surrogate::Linear,
            Surrogate::Hinge,
            Surrogate::Sigmoid,
            Surrogate::LogSigmoid,
            Surrogate::general_sigmoid(2.0).unwrap(),
            Surrogate::general_sigmoid_odd(0.5).unwrap(),
        ];
        for phi1 in surrogates {
            for mode in [PenaltyMode::Signed, PenaltyMode::Absolute, PenaltyMode::Squared] {
                for lambda in [1.0, 1.7] {
                    let s = GroupSplitSurrogate::new(phi1, lambda).unwrap();
                    let cfg = TrainConfig {
                        rho: 0.8,
                        penalty_mode: mode,
                        weight_decay: 0.05,
                        ..TrainConfig::default()
                    };
                    let (gw, gb) = gradient(&model, &data, s, &cfg).unwrap();
                    let (fw, fb) = central_difference_gradient(&model, &data, s, &cfg);
                    for j in 0..model.dim() {
                        let scale = fw[j].abs().max(1e-6);
                        assert!(
                            (gw[j] - fw[j]).abs() / scale < 1e-5,
                            "{phi1} {mode} lambda={lambda} dw[{j}]: {} vs {}",
                            gw[j],
                            fw[j]
                        );
                    }
                    let scale = fb.abs().max(1e-6);
                    assert!((gb - fb).abs() / scale < 1e-5);
                }
            }
        }
    }

    #[test]
    fn unpenalized_gradient_is_pure_logistic() {
        let data = toy_dataset();
        let model = LinearModel {
            weights: array![0.31, -0.22, 0.17],
            bias: 0.05,
        };
        let cfg = TrainConfig::default();
        let (gw, gb) = gradient(&model, &data, Surrogate::Indicator, &cfg).unwrap();
        let (fw, fb) = central_difference_gradient(&model, &data, Surrogate::Linear.into(), &cfg);
        for j in 0..model.dim() {
            assert_abs_diff_eq!(gw[j], fw[j], epsilon = 1e-6);
        }
        assert_abs_diff_eq!(gb, fb, epsilon = 1e-6);
    }

    #[test]
    fn indicator_with_positive_rho_is_rejected() {
        let data = toy_dataset();
        let cfg = TrainConfig {
            rho: 1.0,
            ..TrainConfig::default()
        };
        let err = train(&data, Surrogate::Indicator, &cfg).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn training_separates_a_two_point_set() {
        let data = Dataset {
            features: array![[1.0], [-1.0]],
            labels: vec![1, 0],
            sensitive: vec![1, -1],
            feature_names: vec!["x".into()],
            n_dropped: 0,
        };
        let cfg = TrainConfig {
            max_epochs: 200,
            ..TrainConfig::default()
        };
        let result = train(&data, Surrogate::Linear, &cfg).unwrap();
        let preds = result.model.predict(&data.features).unwrap();
        assert_eq!(preds, vec![1, 0]);
    }

    #[test]
    fn objective_trace_is_nonincreasing() {
        let data = toy_dataset();
        let cfg = TrainConfig {
            rho: 2.0,
            max_epochs: 150,
            ..TrainConfig::default()
        };
        let result = train(&data, Surrogate::Sigmoid, &cfg).unwrap();
        assert!(result.objective_trace.len() >= 2);
        for w in result.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "trace rose: {} -> {}", w[0], w[1]);
        }
        assert_eq!(
            result.final_objective,
            *result.objective_trace.last().unwrap()
        );
    }

    #[test]
    fn training_is_bit_deterministic() {
        let data = toy_dataset();
        let cfg = TrainConfig {
            rho: 0.7,
            init: Init::Gaussian { scale: 0.1 },
            seed: 99,
            max_epochs: 80,
            ..TrainConfig::default()
        };
        let a = train(&data, Surrogate::Sigmoid, &cfg).unwrap();
        let b = train(&data, Surrogate::Sigmoid, &cfg).unwrap();
        assert_eq!(a.model.bias.to_bits(), b.model.bias.to_bits());
        for (x, y) in a.model.weights.iter().zip(b.model.weights.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.objective_trace, b.objective_trace);

        let c = train(
            &data,
            Surrogate::Sigmoid,
            &TrainConfig { seed: 100, ..cfg },
        )
        .unwrap();
        assert_ne!(a.model, c.model);
    }

    #[test]
    fn gaussian_init_scale_is_respected() {
        let cfg = TrainConfig {
            init: Init::Gaussian { scale: 1e-3 },
            seed: 5,
            ..TrainConfig::default()
        };
        let model = init_model(64, &cfg);
        assert!(model.weights.iter().all(|w| w.abs() < 1e-2));
        assert!(model.weights.iter().any(|&w| w != 0.0));
        assert_eq!(model.bias, 0.0);
    }

    #[test]
    fn weight_decay_shrinks_the_solution() {
        let data = toy_dataset();
        let base = TrainConfig {
            max_epochs: 300,
            ..TrainConfig::default()
        };
        let free = train(&data, Surrogate::Linear, &base).unwrap();
        let decayed = train(
            &data,
            Surrogate::Linear,
            &TrainConfig {
                weight_decay: 1.0,
                ..base
            },
        )
        .unwrap();
        let norm = |m: &LinearModel| m.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm(&decayed.model) < norm(&free.model));
    }

    #[test]
    fn non_finite_entry_objective_is_a_divergence_error() {
        let data = toy_dataset();
        let model = LinearModel {
            weights: array![1e308, 1e308, 1e308],
            bias: 0.0,
        };
        let err = train_from(&data, Surrogate::Linear, &TrainConfig::default(), model)
            .unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn fairness_pressure_reduces_ddp_on_biased_data() {
        // Group-shifted one-feature data: the unconstrained fit produces a
        // clearly positive DDP; with rho = 1 it must not be larger on
        // average over seeds.
        let mut gap_free = 0.0;
        let mut gap_pen = 0.0;
        let seeds = 10;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 240;
            let mut rows = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            let mut sensitive = Vec::with_capacity(n);
            for i in 0..n {
                let z: i8 = if i % 2 == 0 { 1 } else { -1 };
                let x: f64 = 0.9 * f64::from(z) + rng.sample::<f64, _>(StandardNormal);
                let p = sigmoid(1.4 * x);
                let y = u8::from(rng.random::<f64>() < p);
                rows.push(x);
                labels.push(y);
                sensitive.push(z);
            }
            let data = Dataset {
                features: Array2::from_shape_vec((n, 1), rows).unwrap(),
                labels,
                sensitive,
                feature_names: vec!["x".into()],
                n_dropped: 0,
            };
            let base = TrainConfig {
                max_epochs: 250,
                ..TrainConfig::default()
            };
            let free = train(&data, Surrogate::Sigmoid, &base).unwrap();
            let pen = train(
                &data,
                Surrogate::Sigmoid,
                &TrainConfig { rho: 1.0, ..base },
            )
            .unwrap();
            let ddp = |m: &LinearModel| {
                let ms = metrics::margins(m, &data).unwrap();
                metrics::ddp_hat_from(&ms).unwrap().abs()
            };
            gap_free += ddp(&free.model);
            gap_pen += ddp(&pen.model);
        }
        gap_free /= seeds as f64;
        gap_pen /= seeds as f64;
        assert!(
            gap_pen <= gap_free,
            "mean |DDP| rose under penalty: {gap_pen} vs {gap_free}"
        );
        assert!(gap_free > 0.2, "baseline data should be visibly biased");
    }

    #[test]
    fn train_result_round_trips_through_json() {
        let data = toy_dataset();
        let cfg = TrainConfig {
            max_epochs: 30,
            ..TrainConfig::default()
        };
        let result = train(&data, Surrogate::Linear, &cfg).unwrap();
        let text = serde_json::to_string(&result).unwrap();
        let back: TrainResult = serde_json::from_str(&text).unwrap();
        assert_eq!(result, back);
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        assert!(TrainConfig { rho: -1.0, ..ok }.validate().is_err());
        assert!(TrainConfig {
            learning_rate: 0.0,
            ..ok
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            grad_tolerance: -1e-6,
            ..ok
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            max_epochs: 0,
            ..ok
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            init: Init::Gaussian { scale: 0.0 },
            ..ok
        }
        .validate()
        .is_err());
    }

    #[test]
    fn penalty_mode_parses() {
        for (name, mode) in [
            ("signed", PenaltyMode::Signed),
            ("absolute", PenaltyMode::Absolute),
            ("squared", PenaltyMode::Squared),
        ] {
            assert_eq!(name.parse::<PenaltyMode>().unwrap(), mode);
            assert_eq!(mode.to_string(), name);
        }
        assert!("huber".parse::<PenaltyMode>().is_err());
    }
}
