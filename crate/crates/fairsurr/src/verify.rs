//! Randomized verification of the crate's identities and bounds.
//!
//! Each check samples inputs that satisfy the preconditions of one claim by
//! construction, evaluates both sides, and counts violations. A passing
//! report has zero violations across every check. Checks are deterministic
//! given the seed: each one draws from its own stream of a counter-based
//! generator, so adding or reordering checks cannot shift another check's
//! randomness.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::balanced;
use crate::error::{Error, Result};
use crate::metrics::{self, MarginSet, MistreatmentDefinition};
use crate::surrogates::{self, Surrogate};

/// Tolerance for the exact (non-statistical) identities.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Absolute slack allowed before a deterministic bound counts as violated,
/// covering accumulated rounding in the bound itself.
const BOUND_TOL: f64 = 1e-12;

/// Per-trial retry budget for rejection samplers.
const RETRY_BUDGET: usize = 10_000;

/// Parameters shared by the verification checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    /// Trials per theorem-style check.
    pub trials: usize,
    /// Smallest per-group sample size drawn.
    pub n_lo: usize,
    /// Largest per-group sample size drawn.
    pub n_hi: usize,
    pub seed: u64,
    /// Cap on the relaxed disparity in the threshold theorems.
    pub epsilon: f64,
    /// Surrogate sharpness slack in the threshold theorems.
    pub gamma: f64,
    /// Number of low-margin points the extension theorem allows.
    pub k: usize,
    /// Failure probability for the concentration check.
    pub delta: f64,
    /// Width of the margin band above the sharpness threshold.
    pub beta: f64,
    /// Inner band edge for the covariance-gap bound.
    pub zeta: f64,
    /// Outer band edge for the covariance-gap bound.
    pub mu: f64,
    /// General-sigmoid slope used by the bound checks.
    pub w: f64,
    /// Monte Carlo repetitions for the moment checks.
    pub reps: usize,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            trials: 10_000,
            n_lo: 20,
            n_hi: 200,
            seed: 0,
            epsilon: 0.05,
            gamma: 0.01,
            k: 3,
            delta: 0.05,
            beta: 10.0,
            zeta: 2.0,
            mu: 5.0,
            w: 0.5,
            reps: 100_000,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.n_lo < 2 || self.n_hi < self.n_lo {
            return Err(Error::Config(format!(
                "need 2 <= n_lo <= n_hi, got n_lo={} n_hi={}",
                self.n_lo, self.n_hi
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(0.0 < self.gamma && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(0.0 < self.delta && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if !(0.0 < self.zeta && self.zeta < self.mu && self.mu.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < zeta < mu, got zeta={} mu={}",
                self.zeta, self.mu
            )));
        }
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(Error::Config(format!("w must be positive, got {}", self.w)));
        }
        if self.reps < 2 {
            return Err(Error::Config("reps must be at least 2".into()));
        }
        Ok(())
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub trials: usize,
    pub violations: usize,
    /// Largest value of (observed - allowed) seen; negative means every
    /// trial kept a margin below its bound.
    pub worst_slack: f64,
    /// Named scalars recorded along the way (empirical moments, radii,
    /// coverages, acceptance statistics).
    pub details: BTreeMap<String, f64>,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        CheckReport {
            name: name.to_string(),
            trials: 0,
            violations: 0,
            worst_slack: f64::NEG_INFINITY,
            details: BTreeMap::new(),
        }
    }

    fn record(&mut self, slack: f64) {
        if slack > self.worst_slack {
            self.worst_slack = slack;
        }
        if slack > 0.0 {
            self.violations += 1;
        }
    }
}

/// Outcome of the whole suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: TrialConfig,
    pub checks: Vec<CheckReport>,
    pub passed: bool,
}

/// Margin magnitude above which the odd general sigmoid with slope `w`
/// clears 1 - gamma: ln((2 - gamma) / gamma) / w.
pub fn threshold_margin(w: f64, gamma: f64) -> f64 {
    ((2.0 - gamma) / gamma).ln() / w
}

fn stream_rng(cfg: &TrialConfig, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    rng
}

/// Identities on small random margin sets: covariance proportionality, the
/// indicator collapse, the disparity-gap decomposition, closed forms of two
/// mistreatment proxies, and the zeroing property of the solved balance
/// factor.
pub fn check_identities(cfg: &TrialConfig) -> Result<CheckReport> {
    let mut rng = stream_rng(cfg, 1);
    let mut rep = CheckReport::new("identities");
    rep.trials = cfg.trials;
    let surrogates = [
        Surrogate::Indicator,
        Surrogate::Linear,
        Surrogate::Hinge,
        Surrogate::Sigmoid,
        Surrogate::LogSigmoid,
        Surrogate::general_sigmoid(0.5)?,
        Surrogate::general_sigmoid_odd(0.5)?,
        Surrogate::general_sigmoid(4.0)?,
    ];

    for _ in 0..cfg.trials {
        let n = rng.random_range(4..=30usize);
        let na = rng.random_range(2..=n - 2);
        let mut margins = Vec::with_capacity(n);
        let mut sensitive = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let d = if rng.random::<f64>() < 0.08 {
                0.0
            } else {
                rng.random_range(-3.0..3.0)
            };
            margins.push(d);
            sensitive.push(if i < na { 1i8 } else { -1 });
            labels.push(u8::from(rng.random::<f64>() < 0.5));
        }
        let m = MarginSet {
            margins,
            sensitive,
            labels: Some(labels),
        };
        let counts = metrics::group_counts(&m)?;
        let factor = 2.0 * counts.na() as f64 * counts.nb() as f64 / (counts.n() as f64).powi(2);
        let dhat = metrics::ddp_hat_from(&m)?;

        for &s in &surrogates {
            let dtilde = metrics::ddp_tilde(&m, s)?;
            let cov = metrics::cov_hat(&m, s)?;
            rep.record((cov - factor * dtilde).abs() - IDENTITY_TOL);
            let g = metrics::gap(&m, s)?;
            rep.record((g - (dhat - dtilde)).abs() - IDENTITY_TOL);
        }

        // The indicator is its own relaxation.
        let collapse = metrics::ddp_tilde(&m, Surrogate::Indicator)?;
        rep.record(if collapse == dhat { -1.0 } else { (collapse - dhat).abs() });

        // The solved balance factor makes the split relaxation exact; the
        // factor may be negative here, so evaluate the split form directly.
        for s in [Surrogate::Linear, Surrogate::Sigmoid, Surrogate::LogSigmoid] {
            match balanced::solve_lambda(&m, s) {
                Ok(lambda) => {
                    let mut mean_a = 0.0;
                    let mut mean_b = 0.0;
                    for (&d, &z) in m.margins.iter().zip(&m.sensitive) {
                        let v = surrogates::eval(s, d);
                        if z == 1 {
                            mean_a += v / counts.na() as f64;
                        } else {
                            mean_b += v / counts.nb() as f64;
                        }
                    }
                    let relaxed = mean_a - lambda * mean_b;
                    rep.record((relaxed - dhat).abs() - IDENTITY_TOL);
                }
                Err(Error::Numeric(_)) => {}
                Err(e) => return Err(e),
            }
        }

        proxy_closed_forms(&m, &mut rep)?;
    }
    Ok(rep)
}

/// Compare two mistreatment proxies against their closed forms.
fn proxy_closed_forms(m: &MarginSet, rep: &mut CheckReport) -> Result<()> {
    let labels = m.labels.as_ref().expect("identity sampler sets labels");
    let n = m.n() as f64;

    // False-positive-rate proxy over the actual negatives, linear shape:
    // -(2 / (N * n_s)) * (n_minus * S_plus - n_plus * S_minus) with
    // S_* the summed positive parts of the margins per subgroup.
    let (mut n_plus, mut n_minus, mut s_plus, mut s_minus) = (0usize, 0usize, 0.0, 0.0);
    for ((&d, &z), &y) in m.margins.iter().zip(&m.sensitive).zip(labels) {
        if y != 0 {
            continue;
        }
        if z == 1 {
            n_plus += 1;
            s_plus += d.max(0.0);
        } else {
            n_minus += 1;
            s_minus += d.max(0.0);
        }
    }
    if n_plus > 0 && n_minus > 0 {
        let ns = (n_plus + n_minus) as f64;
        let closed = (2.0 / (n * ns)) * (n_plus as f64 * s_minus - n_minus as f64 * s_plus);
        let proxy = metrics::mistreatment_proxy(m, MistreatmentDefinition::Fpr, Surrogate::Linear)?;
        rep.record((proxy - closed).abs() - IDENTITY_TOL);
    }

    // Positive-class balance proxy, linear shape: a scaled difference of
    // subgroup mean margins among the actual positives.
    let (mut n_plus, mut n_minus, mut d_plus, mut d_minus) = (0usize, 0usize, 0.0, 0.0);
    for ((&d, &z), &y) in m.margins.iter().zip(&m.sensitive).zip(labels) {
        if y != 1 {
            continue;
        }
        if z == 1 {
            n_plus += 1;
            d_plus += d;
        } else {
            n_minus += 1;
            d_minus += d;
        }
    }
    if n_plus > 0 && n_minus > 0 {
        let ns = (n_plus + n_minus) as f64;
        let scale = 2.0 * n_plus as f64 * n_minus as f64 / (n * ns);
        let closed = scale * (d_plus / n_plus as f64 - d_minus / n_minus as f64);
        let proxy =
            metrics::mistreatment_proxy(m, MistreatmentDefinition::BalancePos, Surrogate::Linear)?;
        rep.record((proxy - closed).abs() - IDENTITY_TOL);
    }
    Ok(())
}

struct ThresholdSample {
    m: MarginSet,
    na: usize,
    nb: usize,
}

/// Draw a margin set whose relaxed disparity under the odd general sigmoid
/// is within epsilon, with `low_margin` points allowed below the sharpness
/// threshold and everything else above it.
fn sample_threshold_instance(
    cfg: &TrialConfig,
    rng: &mut ChaCha8Rng,
    gs_odd: Surrogate,
    low_margin: usize,
    retries: &mut f64,
) -> Result<ThresholdSample> {
    let x_min = threshold_margin(cfg.w, cfg.gamma);
    for _ in 0..RETRY_BUDGET {
        *retries += 1.0;
        let na = rng.random_range(cfg.n_lo..=cfg.n_hi);
        let nb = rng.random_range(cfg.n_lo..=cfg.n_hi);
        let n = na + nb;
        if low_margin > n {
            return Err(Error::Config(format!(
                "k = {low_margin} exceeds the sample size {n}"
            )));
        }
        let f = rng.random_range(0.15..0.85);
        let offset = rng.random_range(-cfg.epsilon..cfg.epsilon);
        let ka = ((f * na as f64).round() as usize).min(na);
        let kb = (((f + offset) * nb as f64).round().max(0.0) as usize).min(nb);

        let mut margins = Vec::with_capacity(n);
        let mut sensitive = Vec::with_capacity(n);
        for i in 0..n {
            let (in_a, positive) = if i < na {
                (true, i < ka)
            } else {
                (false, i - na < kb)
            };
            let u: f64 = rng.random();
            let mag = x_min + cfg.beta * u * u;
            margins.push(if positive { mag } else { -mag });
            sensitive.push(if in_a { 1i8 } else { -1 });
        }
        // Drop the chosen points below the threshold, keeping their signs.
        for _ in 0..low_margin {
            let i = rng.random_range(0..n);
            let mag = rng.random::<f64>() * x_min;
            margins[i] = margins[i].signum() * mag;
        }
        let m = MarginSet {
            margins,
            sensitive,
            labels: None,
        };
        if metrics::ddp_tilde(&m, gs_odd)?.abs() <= cfg.epsilon {
            return Ok(ThresholdSample { m, na, nb });
        }
    }
    Err(Error::Data(format!(
        "threshold sampler exhausted its {RETRY_BUDGET}-retry budget; \
         epsilon = {} is too tight for the configured group sizes",
        cfg.epsilon
    )))
}

/// Sharp margins: if every |d| clears the sharpness threshold and the
/// relaxed disparity is within epsilon, the exact disparity is within
/// epsilon / 2 + gamma.
pub fn check_theorem1(cfg: &TrialConfig) -> Result<CheckReport> {
    let mut rng = stream_rng(cfg, 2);
    let mut rep = CheckReport::new("theorem1");
    rep.trials = cfg.trials;
    let gs_odd = Surrogate::general_sigmoid_odd(cfg.w)?;
    let bound = cfg.epsilon / 2.0 + cfg.gamma;
    let mut retries = 0.0;
    for _ in 0..cfg.trials {
        let s = sample_threshold_instance(cfg, &mut rng, gs_odd, 0, &mut retries)?;
        let dhat = metrics::ddp_hat_from(&s.m)?;
        rep.record(dhat.abs() - bound - BOUND_TOL);
    }
    rep.details.insert("bound".into(), bound);
    rep.details
        .insert("threshold_margin".into(), threshold_margin(cfg.w, cfg.gamma));
    rep.details
        .insert("mean_retries".into(), retries / cfg.trials as f64);
    Ok(rep)
}

/// Dull margins: allowing k points below the threshold widens the bound by
/// (1/Na + 1/Nb) * k / 2.
pub fn check_theorem2(cfg: &TrialConfig) -> Result<CheckReport> {
    let mut rng = stream_rng(cfg, 3);
    let mut rep = CheckReport::new("theorem2");
    rep.trials = cfg.trials;
    let gs_odd = Surrogate::general_sigmoid_odd(cfg.w)?;
    let mut retries = 0.0;
    for _ in 0..cfg.trials {
        let s = sample_threshold_instance(cfg, &mut rng, gs_odd, cfg.k, &mut retries)?;
        let widen = 0.5 * (1.0 / s.na as f64 + 1.0 / s.nb as f64) * cfg.k as f64;
        let bound = cfg.epsilon / 2.0 + cfg.gamma + widen;
        let dhat = metrics::ddp_hat_from(&s.m)?;
        rep.record(dhat.abs() - bound - BOUND_TOL);
    }
    rep.details.insert("k".into(), cfg.k as f64);
    rep.details
        .insert("mean_retries".into(), retries / cfg.trials as f64);
    Ok(rep)
}

/// Covariance tracking under banded margins, equal group sizes: with k
/// magnitudes in [zeta, mu] and the rest in [0, zeta],
/// |w/2 * Cov(z, d) - Cov(z, G(d))| <= (k/N) Q(mu) + (1 - k/N) Q(zeta)
/// where Q(x) = w x / 2 - G(x) is the gap of the odd general sigmoid.
pub fn check_theorem_f1(cfg: &TrialConfig) -> Result<CheckReport> {
    let mut rng = stream_rng(cfg, 4);
    let mut rep = CheckReport::new("theorem_f1");
    rep.trials = cfg.trials;
    let gs_odd = Surrogate::general_sigmoid_odd(cfg.w)?;
    let q_zeta = surrogates::q_gap(cfg.w, cfg.zeta);
    let q_mu = surrogates::q_gap(cfg.w, cfg.mu);

    for trial in 0..cfg.trials {
        // Trial zero pins the reference configuration; the rest draw sizes
        // and band occupancy at random.
        let (n_group, k) = if trial == 0 {
            (625usize, 64usize)
        } else {
            let n_group = rng.random_range(cfg.n_lo..=cfg.n_hi);
            (n_group, rng.random_range(0..=n_group))
        };
        let n = 2 * n_group;
        let mut margins = Vec::with_capacity(n);
        let mut sensitive = Vec::with_capacity(n);
        let mut outer = vec![false; n];
        for slot in outer.iter_mut().take(k) {
            *slot = true;
        }
        // Scatter the outer-band points across both groups.
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            outer.swap(i, j);
        }
        for (i, &is_outer) in outer.iter().enumerate() {
            let mag = if is_outer {
                rng.random_range(cfg.zeta..cfg.mu)
            } else {
                rng.random_range(0.0..cfg.zeta)
            };
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            margins.push(sign * mag);
            sensitive.push(if i < n_group { 1i8 } else { -1 });
        }
        let m = MarginSet {
            margins,
            sensitive,
            labels: None,
        };
        let cov_d = metrics::cov_hat(&m, Surrogate::Linear)?;
        let cov_g = metrics::cov_hat(&m, gs_odd)?;
        let lhs = (0.5 * cfg.w * cov_d - cov_g).abs();
        let frac = k as f64 / n as f64;
        let bound = frac * q_mu + (1.0 - frac) * q_zeta;
        rep.record(lhs - bound - BOUND_TOL);
        if trial == 0 {
            rep.details.insert("reference_lhs".into(), lhs);
            rep.details.insert("reference_bound".into(), bound);
        }
    }
    rep.details.insert("q_zeta".into(), q_zeta);
    rep.details.insert("q_mu".into(), q_mu);
    Ok(rep)
}

fn sample_mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo check of the disparity variance formulas at group rates
/// (0.3, 0.8) with sizes (120, 80): the empirical variance must match the
/// exact formula within five standard errors (standard error estimated via
/// the fourth central moment) and stay below the closed-form cap. The
/// rate-substituted formula is recorded so its gap from the exact one is
/// visible.
pub fn check_variance(cfg: &TrialConfig) -> Result<CheckReport> {
    let mut rng = stream_rng(cfg, 5);
    let mut rep = CheckReport::new("variance");
    rep.trials = cfg.reps;
    let (pa, pb, na, nb) = (0.3, 0.8, 120usize, 80usize);

    let mut draws = Vec::with_capacity(cfg.reps);
    for _ in 0..cfg.reps {
        let mut ka = 0usize;
        for _ in 0..na {
            ka += usize::from(rng.random::<f64>() < pa);
        }
        let mut kb = 0usize;
        for _ in 0..nb {
            kb += usize::from(rng.random::<f64>() < pb);
        }
        draws.push(ka as f64 / na as f64 - kb as f64 / nb as f64);
    }
    let (mean, mean_se) = sample_mean_and_se(&draws);
    let n = draws.len() as f64;
    let s2 = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let m4 = draws.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let s2_se = ((m4 - s2 * s2).max(f64::MIN_POSITIVE) / n).sqrt();

    let exact = metrics::variance_exact(pa, pb, na, nb)?;
    let substituted = metrics::variance_substituted(pa, na, nb)?;
    let bound = metrics::variance_bound(na, nb)?;

    rep.record((s2 - exact).abs() - 5.0 * s2_se);
    rep.record(s2 - bound - 5.0 * s2_se);
    rep.record((mean - (pa - pb)).abs() - 5.0 * mean_se);
    rep.record(exact - bound);

    rep.details.insert("empirical_variance".into(), s2);
    rep.details.insert("exact".into(), exact);
    rep.details.insert("substituted".into(), substituted);
    rep.details.insert("bound".into(), bound);
    rep.details.insert("se".into(), s2_se);
    rep.details
        .insert("substituted_gap_in_se".into(), (s2 - substituted).abs() / s2_se);
    Ok(rep)
}

/// The 1/N covariance estimator is biased by exactly (N-1)/N; rescaling by
/// N/(N-1) removes the bias. Checked at N in {2, 10, 100} against the
/// population covariance of a linear-in-z margin model.
pub fn check_bias(cfg: &TrialConfig) -> Result<CheckReport> {
    let mut rng = stream_rng(cfg, 6);
    let mut rep = CheckReport::new("bias");
    rep.trials = cfg.reps;
    let (q, slope) = (0.35, 0.8);
    // z has variance 1 - (2q - 1)^2 and the noise is independent of z.
    let cov_pop = slope * (1.0 - (2.0 * q - 1.0) * (2.0 * q - 1.0));
    rep.details.insert("population_cov".into(), cov_pop);

    for n in [2usize, 10, 100] {
        let mut draws = Vec::with_capacity(cfg.reps);
        for _ in 0..cfg.reps {
            let mut zs = [0.0f64; 100];
            let mut ds = [0.0f64; 100];
            let mut z_sum = 0.0;
            for i in 0..n {
                let z = if rng.random::<f64>() < q { 1.0 } else { -1.0 };
                zs[i] = z;
                ds[i] = slope * z + rng.sample::<f64, _>(StandardNormal);
                z_sum += z;
            }
            let z_bar = z_sum / n as f64;
            let mut cov = 0.0;
            for i in 0..n {
                cov += (zs[i] - z_bar) * ds[i];
            }
            draws.push(cov / n as f64);
        }
        let (mean, se) = sample_mean_and_se(&draws);
        let factor = (n - 1) as f64 / n as f64;
        rep.record((mean - factor * cov_pop).abs() - 5.0 * se);
        // The same draws rescaled by N/(N-1) must be unbiased.
        let unbiased = mean / factor;
        rep.record((unbiased - cov_pop).abs() - 5.0 * se / factor);
        rep.details.insert(format!("mean_n{n}"), mean);
        rep.details.insert(format!("expected_n{n}"), factor * cov_pop);
        rep.details.insert(format!("se_n{n}"), se);
    }
    Ok(rep)
}

/// Concentration radii at group rates (0.3, 0.7) with 1000 per group: the
/// per-group union radius and the two-group additive radius must both cover
/// at least 1 - delta of the draws. Two optimistic radii are recorded for
/// reference without assertion.
pub fn check_risk_bound(cfg: &TrialConfig) -> Result<CheckReport> {
    let mut rng = stream_rng(cfg, 7);
    let mut rep = CheckReport::new("risk_bound");
    rep.trials = cfg.trials;
    let (pa, pb, na, nb) = (0.3, 0.7, 1000usize, 1000usize);
    let truth = pa - pb;
    let ln2d = (2.0 / cfg.delta).ln();
    let t_min = (ln2d / (2.0 * na.min(nb) as f64)).sqrt();
    let t_two = (0.5 * ln2d * (1.0 / na as f64 + 1.0 / nb as f64)).sqrt();
    let n_total = (na + nb) as f64;
    let t_stated = (0.5 * ln2d).sqrt() * (n_total / (n_total - 1.0).powi(2)).sqrt();
    let t_proof = (0.5 * ln2d / n_total).sqrt();

    let radii = [t_min, t_two, t_stated, t_proof];
    let mut covered = [0usize; 4];
    for _ in 0..cfg.trials {
        let mut ka = 0usize;
        for _ in 0..na {
            ka += usize::from(rng.random::<f64>() < pa);
        }
        let mut kb = 0usize;
        for _ in 0..nb {
            kb += usize::from(rng.random::<f64>() < pb);
        }
        let err = (ka as f64 / na as f64 - kb as f64 / nb as f64 - truth).abs();
        for (slot, &t) in covered.iter_mut().zip(&radii) {
            *slot += usize::from(err <= t);
        }
    }
    let coverage: Vec<f64> = covered
        .iter()
        .map(|&c| c as f64 / cfg.trials as f64)
        .collect();
    let target = 1.0 - cfg.delta;
    rep.record(target - coverage[0]);
    rep.record(target - coverage[1]);

    for (key, value) in [
        ("t_min", t_min),
        ("t_two", t_two),
        ("t_stated", t_stated),
        ("t_proof", t_proof),
        ("coverage_t_min", coverage[0]),
        ("coverage_t_two", coverage[1]),
        ("coverage_t_stated", coverage[2]),
        ("coverage_t_proof", coverage[3]),
        ("target", target),
    ] {
        rep.details.insert(key.into(), value);
    }
    Ok(rep)
}

/// Run every check and aggregate the pass flag.
pub fn run_all(cfg: &TrialConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let checks = vec![
        check_identities(cfg)?,
        check_theorem1(cfg)?,
        check_theorem2(cfg)?,
        check_theorem_f1(cfg)?,
        check_variance(cfg)?,
        check_bias(cfg)?,
        check_risk_bound(cfg)?,
    ];
    let passed = checks.iter().all(|c| c.violations == 0);
    Ok(VerifyReport {
        config: *cfg,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quick() -> TrialConfig {
        TrialConfig {
            trials: 300,
            reps: 20_000,
            ..TrialConfig::default()
        }
    }

    #[test]
    fn threshold_margin_matches_reference_value() {
        let x_min = threshold_margin(0.5, 0.01);
        assert_abs_diff_eq!(x_min, 10.586609649448985, epsilon = 1e-15);
        // At the threshold the odd general sigmoid sits exactly at
        // 1 - gamma.
        let gs = Surrogate::general_sigmoid_odd(0.5).unwrap();
        assert_abs_diff_eq!(surrogates::eval(gs, x_min), 0.99, epsilon = 1e-12);
    }

    #[test]
    fn gap_reference_values_are_pinned() {
        assert_abs_diff_eq!(
            surrogates::q_gap(0.5, 2.0),
            0.03788284273999021,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            surrogates::q_gap(0.5, 5.0),
            0.4017163600424869,
            epsilon = 1e-15
        );
        let frac = 64.0 / 1250.0;
        let bound = frac * surrogates::q_gap(0.5, 5.0) + (1.0 - frac) * surrogates::q_gap(0.5, 2.0);
        assert_abs_diff_eq!(bound, 0.05651111882587804, epsilon = 1e-15);
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        assert!(TrialConfig::default().validate().is_ok());
        assert!(TrialConfig { trials: 0, ..TrialConfig::default() }.validate().is_err());
        assert!(TrialConfig { gamma: 1.0, ..TrialConfig::default() }.validate().is_err());
        assert!(TrialConfig { zeta: 6.0, ..TrialConfig::default() }.validate().is_err());
        assert!(TrialConfig { n_lo: 50, n_hi: 20, ..TrialConfig::default() }.validate().is_err());
        assert!(TrialConfig { delta: 0.0, ..TrialConfig::default() }.validate().is_err());
    }

    #[test]
    fn identities_hold_on_a_quick_run() {
        let rep = check_identities(&quick()).unwrap();
        assert_eq!(rep.violations, 0, "worst slack {}", rep.worst_slack);
    }

    #[test]
    fn theorem1_holds_on_a_quick_run() {
        let rep = check_theorem1(&quick()).unwrap();
        assert_eq!(rep.violations, 0, "worst slack {}", rep.worst_slack);
        assert_abs_diff_eq!(rep.details["bound"], 0.035, epsilon = 1e-15);
    }

    #[test]
    fn theorem2_holds_on_a_quick_run() {
        let rep = check_theorem2(&quick()).unwrap();
        assert_eq!(rep.violations, 0, "worst slack {}", rep.worst_slack);
    }

    #[test]
    fn theorem_f1_holds_and_pins_the_reference_configuration() {
        let rep = check_theorem_f1(&quick()).unwrap();
        assert_eq!(rep.violations, 0, "worst slack {}", rep.worst_slack);
        assert_abs_diff_eq!(
            rep.details["reference_bound"],
            0.05651111882587804,
            epsilon = 1e-15
        );
        assert!(rep.details["reference_lhs"] <= rep.details["reference_bound"]);
    }

    #[test]
    fn variance_check_passes_and_separates_the_substituted_formula() {
        let rep = check_variance(&quick()).unwrap();
        assert_eq!(rep.violations, 0, "worst slack {}", rep.worst_slack);
        assert_abs_diff_eq!(rep.details["exact"], 0.00375, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.details["substituted"], 0.004375, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.details["bound"], 0.005208333333333334, epsilon = 1e-15);
        // The substituted formula is far enough from the exact one that the
        // five-standard-error test genuinely tells them apart.
        assert!(rep.details["substituted_gap_in_se"] > 10.0);
    }

    #[test]
    fn bias_factors_match_on_a_quick_run() {
        let rep = check_bias(&quick()).unwrap();
        assert_eq!(rep.violations, 0, "worst slack {}", rep.worst_slack);
        assert_abs_diff_eq!(rep.details["population_cov"], 0.728, epsilon = 1e-15);
        assert_abs_diff_eq!(
            rep.details["expected_n2"],
            0.364,
            epsilon = 1e-12
        );
    }

    #[test]
    fn risk_bound_radii_are_pinned_and_covered() {
        let cfg = TrialConfig {
            trials: 4_000,
            ..TrialConfig::default()
        };
        let rep = check_risk_bound(&cfg).unwrap();
        assert_eq!(rep.violations, 0, "worst slack {}", rep.worst_slack);
        assert_abs_diff_eq!(rep.details["t_min"], 0.04294694083467376, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.details["t_two"], 0.060736146190830516, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.details["t_stated"], 0.03038326472777915, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.details["t_proof"], 0.030368073095415258, epsilon = 1e-15);
    }

    #[test]
    fn run_all_is_deterministic_given_the_seed() {
        let cfg = TrialConfig {
            trials: 100,
            reps: 5_000,
            ..TrialConfig::default()
        };
        let a = run_all(&cfg).unwrap();
        let b = run_all(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.passed);
        assert_eq!(a.checks.len(), 7);
        let text = serde_json::to_string(&a).unwrap();
        let back: VerifyReport = serde_json::from_str(&text).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn sampler_errors_when_epsilon_is_unreachable() {
        // With one point per group the relaxed disparity can never come
        // close to zero while all margins clear the threshold, so the
        // rejection sampler must give up with a data error.
        let cfg = TrialConfig {
            trials: 1,
            n_lo: 2,
            n_hi: 2,
            epsilon: 1e-9,
            ..TrialConfig::default()
        };
        let err = check_theorem1(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
