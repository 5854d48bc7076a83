//! Group fairness metrics over classifier margins.
//!
//! Conventions used throughout:
//! - a prediction is positive exactly when the margin d is strictly positive
//!   (a margin of 0 predicts the negative class);
//! - the sensitive attribute z takes values in {-1, +1}; z = +1 is "group
//!   a", z = -1 is "group b"; labels are stored in {0, 1} and mapped to
//!   {-1, +1} (0 -> -1) where a signed label is needed;
//! - DDP refers to the demographic parity difference
//!   P(d > 0 | z = +1) - P(d > 0 | z = -1).
//!
//! Confusion cells follow a row-major actual/predicted convention in which,
//! within each group, `tp` counts actual +1 predicted +1, `tn` counts actual
//! +1 predicted -1, `fp` counts actual -1 predicted +1, and `fn_` counts
//! actual -1 predicted -1. Note that under this convention `tn` is what is
//! elsewhere called a false negative and `fn_` a true negative; the
//! mistreatment proxies below are defined against exactly these cells.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::surrogates::{self, GroupSplitSurrogate, Surrogate};
use crate::trainer::LinearModel;

/// Margins with their sensitive attributes and (optionally) labels; the
/// input to every metric in this module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginSet {
    pub margins: Vec<f64>,
    /// Sensitive attribute per row, +1 or -1.
    pub sensitive: Vec<i8>,
    /// Labels per row in {0, 1}, when the producing context has them.
    pub labels: Option<Vec<u8>>,
}

impl MarginSet {
    pub fn new(margins: Vec<f64>, sensitive: Vec<i8>, labels: Option<Vec<u8>>) -> Result<Self> {
        let m = MarginSet {
            margins,
            sensitive,
            labels,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.margins.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.margins.is_empty() {
            return Err(Error::Data("empty margin set".into()));
        }
        if self.sensitive.len() != self.n() {
            return Err(Error::Data(format!(
                "margin/sensitive length mismatch: {} vs {}",
                self.n(),
                self.sensitive.len()
            )));
        }
        if let Some(y) = &self.labels {
            if y.len() != self.n() {
                return Err(Error::Data(format!(
                    "margin/label length mismatch: {} vs {}",
                    self.n(),
                    y.len()
                )));
            }
            if y.iter().any(|&v| v > 1) {
                return Err(Error::Data("labels must be 0 or 1".into()));
            }
        }
        if let Some(d) = self.margins.iter().find(|d| !d.is_finite()) {
            return Err(Error::Numeric(format!("non-finite margin {d}")));
        }
        if self.sensitive.iter().any(|&z| z != 1 && z != -1) {
            return Err(Error::Data("sensitive entries must be +1 or -1".into()));
        }
        Ok(())
    }

    /// Labels in signed form (+1/-1, with 0 -> -1).
    pub fn labels_pm(&self) -> Result<Vec<i8>> {
        let y = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::Data("this metric needs labels".into()))?;
        Ok(y.iter().map(|&v| if v == 1 { 1 } else { -1 }).collect())
    }
}

/// Margins d_i = w.x_i + b for every row, bundled with the dataset's
/// sensitive attribute and labels.
pub fn margins(model: &LinearModel, data: &Dataset) -> Result<MarginSet> {
    let d = model.margins(data)?;
    MarginSet::new(d, data.sensitive.clone(), Some(data.labels.clone()))
}

/// Like [`margins`] but with each margin divided by the weight norm, giving
/// geometric point-to-hyperplane distances that compare across runs.
pub fn normalized_margins(model: &LinearModel, data: &Dataset) -> Result<MarginSet> {
    let norm = model.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Numeric(
            "cannot normalize margins of a zero-weight model".into(),
        ));
    }
    let mut m = margins(model, data)?;
    for d in &mut m.margins {
        *d /= norm;
    }
    Ok(m)
}

/// Per-group counts of positive/negative predictions.
///
/// `n1a` counts d > 0 in group a (z = +1), `n0a` counts d <= 0 in group a;
/// `n1b`/`n0b` are the same for group b (z = -1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub n1a: usize,
    pub n0a: usize,
    pub n1b: usize,
    pub n0b: usize,
}

impl GroupCounts {
    pub fn na(&self) -> usize {
        self.n1a + self.n0a
    }

    pub fn nb(&self) -> usize {
        self.n1b + self.n0b
    }

    pub fn n(&self) -> usize {
        self.na() + self.nb()
    }
}

pub(crate) fn group_counts_slices(margins: &[f64], z: &[i8]) -> Result<GroupCounts> {
    let mut c = GroupCounts {
        n1a: 0,
        n0a: 0,
        n1b: 0,
        n0b: 0,
    };
    for (&d, &zi) in margins.iter().zip(z) {
        match (zi == 1, d > 0.0) {
            (true, true) => c.n1a += 1,
            (true, false) => c.n0a += 1,
            (false, true) => c.n1b += 1,
            (false, false) => c.n0b += 1,
        }
    }
    if c.na() == 0 || c.nb() == 0 {
        return Err(Error::Data(format!(
            "need both groups present, got {} in group a and {} in group b",
            c.na(),
            c.nb()
        )));
    }
    Ok(c)
}

/// Count positive/negative predictions per group.
pub fn group_counts(m: &MarginSet) -> Result<GroupCounts> {
    m.validate()?;
    group_counts_slices(&m.margins, &m.sensitive)
}

/// Frequency estimate of the demographic parity difference:
/// n1a/(n1a+n0a) - n1b/(n1b+n0b).
pub fn ddp_hat(c: &GroupCounts) -> f64 {
    c.n1a as f64 / c.na() as f64 - c.n1b as f64 / c.nb() as f64
}

/// [`ddp_hat`] straight from a margin set.
pub fn ddp_hat_from(m: &MarginSet) -> Result<f64> {
    Ok(ddp_hat(&group_counts(m)?))
}

pub(crate) fn ddp_tilde_slices(
    margins: &[f64],
    z: &[i8],
    phi1: Surrogate,
    lambda: f64,
) -> Result<f64> {
    let (mut sum_a, mut na) = (0.0, 0usize);
    let (mut sum_b, mut nb) = (0.0, 0usize);
    for (&d, &zi) in margins.iter().zip(z) {
        let v = surrogates::eval(phi1, d);
        if zi == 1 {
            sum_a += v;
            na += 1;
        } else {
            sum_b += v;
            nb += 1;
        }
    }
    if na == 0 || nb == 0 {
        return Err(Error::Data("need both groups present".into()));
    }
    Ok(sum_a / na as f64 - lambda * (sum_b / nb as f64))
}

/// Surrogate relaxation of DDP: the group-mean difference of phi(d). With a
/// [`GroupSplitSurrogate`] the group-b mean is scaled by its balance factor.
pub fn ddp_tilde(m: &MarginSet, s: impl Into<GroupSplitSurrogate>) -> Result<f64> {
    m.validate()?;
    let s = s.into();
    ddp_tilde_slices(&m.margins, &m.sensitive, s.phi1, s.lambda)
}

/// Covariance-style proxy (1/N) sum_i (z_i - mean(z)) phi(d_i).
pub fn cov_hat(m: &MarginSet, s: Surrogate) -> Result<f64> {
    m.validate()?;
    let n = m.n() as f64;
    let z_bar = m.sensitive.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mut acc = 0.0;
    for (&d, &zi) in m.margins.iter().zip(&m.sensitive) {
        acc += (zi as f64 - z_bar) * surrogates::eval(s, d);
    }
    Ok(acc / n)
}

/// Surrogate-fairness gap: the group-mean difference of [1[d>0] - phi(d)].
///
/// Equal (up to rounding) to `ddp_hat - ddp_tilde` for the same surrogate.
pub fn gap(m: &MarginSet, s: Surrogate) -> Result<f64> {
    m.validate()?;
    let (mut sum_a, mut na) = (0.0, 0usize);
    let (mut sum_b, mut nb) = (0.0, 0usize);
    for (&d, &zi) in m.margins.iter().zip(&m.sensitive) {
        let v = surrogates::eval(Surrogate::Indicator, d) - surrogates::eval(s, d);
        if zi == 1 {
            sum_a += v;
            na += 1;
        } else {
            sum_b += v;
            nb += 1;
        }
    }
    if na == 0 || nb == 0 {
        return Err(Error::Data("need both groups present".into()));
    }
    Ok(sum_a / na as f64 - sum_b / nb as f64)
}

pub(crate) fn accuracy_slices(margins: &[f64], y_pm: &[i8]) -> f64 {
    let correct = margins
        .iter()
        .zip(y_pm)
        .filter(|&(&d, &yi)| (d > 0.0) == (yi == 1))
        .count();
    correct as f64 / margins.len() as f64
}

/// Fraction of rows whose predicted sign matches the label.
pub fn accuracy(m: &MarginSet) -> Result<f64> {
    m.validate()?;
    Ok(accuracy_slices(&m.margins, &m.labels_pm()?))
}

/// Exact sampling variance of the DDP frequency estimator when the two
/// groups' positive rates are pa and pb: pa(1-pa)/na + pb(1-pb)/nb.
pub fn variance_exact(pa: f64, pb: f64, na: usize, nb: usize) -> Result<f64> {
    for (name, p) in [("pa", pa), ("pb", pb)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
        }
    }
    if na == 0 || nb == 0 {
        return Err(Error::Config("group sizes must be at least 1".into()));
    }
    Ok(pa * (1.0 - pa) / na as f64 + pb * (1.0 - pb) / nb as f64)
}

/// Closed form obtained by substituting pb = 1 - pa into the variance:
/// (1/4)(1/na + 1/nb) - (1/na + 1/nb)(pa - 1/2)^2. Coincides with
/// [`variance_exact`] only on that slice; kept for comparison against it.
pub fn variance_substituted(pa: f64, na: usize, nb: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&pa) {
        return Err(Error::Config(format!("pa must lie in [0, 1], got {pa}")));
    }
    if na == 0 || nb == 0 {
        return Err(Error::Config("group sizes must be at least 1".into()));
    }
    let inv = 1.0 / na as f64 + 1.0 / nb as f64;
    Ok(0.25 * inv - inv * (pa - 0.5) * (pa - 0.5))
}

/// Distribution-free bound on the DDP estimator variance:
/// (1/4)(1/na + 1/nb).
pub fn variance_bound(na: usize, nb: usize) -> Result<f64> {
    if na == 0 || nb == 0 {
        return Err(Error::Config("group sizes must be at least 1".into()));
    }
    Ok(0.25 * (1.0 / na as f64 + 1.0 / nb as f64))
}

/// Confusion cells for one group; see the module docs for the naming
/// convention (`tn` = actual +1 predicted -1, `fn_` = actual -1 predicted -1).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCells {
    /// Actual +1, predicted +1.
    pub tp: usize,
    /// Actual +1, predicted -1.
    pub tn: usize,
    /// Actual -1, predicted +1.
    pub fp: usize,
    /// Actual -1, predicted -1.
    pub fn_: usize,
}

/// Confusion cells split by sensitive group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionByGroup {
    /// Cells for group a (z = +1).
    pub a: ConfusionCells,
    /// Cells for group b (z = -1).
    pub b: ConfusionCells,
}

/// Tally confusion cells per group.
pub fn confusion_by_group(m: &MarginSet) -> Result<ConfusionByGroup> {
    m.validate()?;
    let y = m.labels_pm()?;
    let mut out = ConfusionByGroup::default();
    for ((&d, &yi), &zi) in m.margins.iter().zip(&y).zip(&m.sensitive) {
        let cell = if zi == 1 { &mut out.a } else { &mut out.b };
        match (yi == 1, d > 0.0) {
            (true, true) => cell.tp += 1,
            (true, false) => cell.tn += 1,
            (false, true) => cell.fp += 1,
            (false, false) => cell.fn_ += 1,
        }
    }
    Ok(out)
}

/// Box-plot statistics and fence-based outlier counts for one
/// (group, predicted sign) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub group: i8,
    pub predicted: i8,
    pub n: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub lo_fence: f64,
    pub hi_fence: f64,
    pub n_outliers: usize,
}

/// Large-margin (outlier) statistics over all populated
/// (group, predicted sign) cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeMarginStats {
    pub cells: Vec<CellStats>,
    pub total: usize,
    pub total_outliers: usize,
}

impl LargeMarginStats {
    /// Overall fraction of rows flagged as large-margin outliers.
    pub fn outlier_rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.total_outliers as f64 / self.total as f64
        }
    }

    /// Write the per-cell table as CSV for external box-plot tooling.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "group",
            "predicted",
            "q1",
            "median",
            "q3",
            "lo_fence",
            "hi_fence",
            "n",
            "n_outliers",
        ])?;
        for c in &self.cells {
            w.write_record([
                c.group.to_string(),
                c.predicted.to_string(),
                c.q1.to_string(),
                c.median.to_string(),
                c.q3.to_string(),
                c.lo_fence.to_string(),
                c.hi_fence.to_string(),
                c.n.to_string(),
                c.n_outliers.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Linear-interpolation quantile on a sorted slice (the convention used by
/// standard box plots: position p * (n - 1)).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

const TUKEY_MULTIPLIER: f64 = 1.5;

/// Box-plot fences and outlier counts per (group, predicted sign) cell.
///
/// Fences sit at q1 - 1.5 IQR and q3 + 1.5 IQR; values strictly outside the
/// fences count as large-margin outliers. Empty cells are omitted.
pub fn large_margin_stats(m: &MarginSet) -> Result<LargeMarginStats> {
    m.validate()?;
    let mut cells = Vec::with_capacity(4);
    let mut total_outliers = 0;
    for &group in &[1i8, -1] {
        for &predicted in &[1i8, -1] {
            let mut vals: Vec<f64> = m
                .margins
                .iter()
                .zip(&m.sensitive)
                .filter(|&(&d, &zi)| zi == group && (d > 0.0) == (predicted == 1))
                .map(|(&d, _)| d)
                .collect();
            if vals.is_empty() {
                continue;
            }
            vals.sort_by(|a, b| a.partial_cmp(b).expect("finite margins"));
            let q1 = quantile_sorted(&vals, 0.25);
            let median = quantile_sorted(&vals, 0.5);
            let q3 = quantile_sorted(&vals, 0.75);
            let iqr = q3 - q1;
            let lo_fence = q1 - TUKEY_MULTIPLIER * iqr;
            let hi_fence = q3 + TUKEY_MULTIPLIER * iqr;
            let n_outliers = vals.iter().filter(|&&v| v < lo_fence || v > hi_fence).count();
            total_outliers += n_outliers;
            cells.push(CellStats {
                group,
                predicted,
                n: vals.len(),
                q1,
                median,
                q3,
                lo_fence,
                hi_fence,
                n_outliers,
            });
        }
    }
    Ok(LargeMarginStats {
        cells,
        total: m.n(),
        total_outliers,
    })
}

/// Which disparate-mistreatment or balance notion a proxy targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MistreatmentDefinition {
    /// Overall misclassification rate; sums over every row.
    Omr,
    /// False-positive rate; sums over actual negatives.
    Fpr,
    /// False-negative rate; sums over actual positives.
    Fnr,
    /// Balance for the positive class; sums over actual positives.
    BalancePos,
    /// Balance for the negative class; sums over actual negatives.
    BalanceNeg,
}

impl std::str::FromStr for MistreatmentDefinition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omr" => Ok(Self::Omr),
            "fpr" => Ok(Self::Fpr),
            "fnr" => Ok(Self::Fnr),
            "balance_pos" => Ok(Self::BalancePos),
            "balance_neg" => Ok(Self::BalanceNeg),
            other => Err(Error::Config(format!(
                "unknown mistreatment definition {other:?}"
            ))),
        }
    }
}

/// Covariance-style mistreatment proxy
/// (1/N) sum_{i in S} (z_i - mean_S(z)) phi(g(y_i, d_i)),
/// where the summation set S and the margin transform g depend on the
/// definition, N is the full row count, and mean_S(z) is the group mean
/// over S (for `Omr`, S is the full set). Labels are used in signed form.
pub fn mistreatment_proxy(
    m: &MarginSet,
    def: MistreatmentDefinition,
    s: Surrogate,
) -> Result<f64> {
    m.validate()?;
    let y = m.labels_pm()?;

    let in_subset = |yi: i8| match def {
        MistreatmentDefinition::Omr => true,
        MistreatmentDefinition::Fpr | MistreatmentDefinition::BalanceNeg => yi == -1,
        MistreatmentDefinition::Fnr | MistreatmentDefinition::BalancePos => yi == 1,
    };
    let g = |yi: i8, d: f64| {
        let yf = yi as f64;
        match def {
            MistreatmentDefinition::Omr => (yf * d).min(0.0),
            MistreatmentDefinition::Fpr => ((1.0 - yf) / 2.0 * yf * d).min(0.0),
            MistreatmentDefinition::Fnr => ((1.0 + yf) / 2.0 * yf * d).min(0.0),
            MistreatmentDefinition::BalancePos => (1.0 + yf) / 2.0 * d,
            MistreatmentDefinition::BalanceNeg => (1.0 - yf) / 2.0 * d,
        }
    };

    let mut z_sum = 0.0;
    let mut n_subset = 0usize;
    for (&yi, &zi) in y.iter().zip(&m.sensitive) {
        if in_subset(yi) {
            z_sum += zi as f64;
            n_subset += 1;
        }
    }
    if n_subset == 0 {
        return Err(Error::Data(
            "mistreatment proxy summation set is empty".into(),
        ));
    }
    let z_bar = z_sum / n_subset as f64;

    let mut acc = 0.0;
    for ((&d, &yi), &zi) in m.margins.iter().zip(&y).zip(&m.sensitive) {
        if in_subset(yi) {
            acc += (zi as f64 - z_bar) * surrogates::eval(s, g(yi, d));
        }
    }
    Ok(acc / m.n() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Margins (2, 1, -1) in group a and (1, -0.5) in group b.
    fn five_point() -> MarginSet {
        MarginSet::new(vec![2.0, 1.0, -1.0, 1.0, -0.5], vec![1, 1, 1, -1, -1], None).unwrap()
    }

    fn with_labels(margins: Vec<f64>, sensitive: Vec<i8>, labels: Vec<u8>) -> MarginSet {
        MarginSet::new(margins, sensitive, Some(labels)).unwrap()
    }

    #[test]
    fn margin_set_validation_catches_bad_input() {
        assert!(MarginSet::new(vec![], vec![], None).is_err());
        assert!(MarginSet::new(vec![1.0], vec![1, -1], None).is_err());
        assert!(MarginSet::new(vec![f64::NAN], vec![1], None).is_err());
        assert!(MarginSet::new(vec![1.0], vec![0], None).is_err());
        assert!(MarginSet::new(vec![1.0], vec![1], Some(vec![2])).is_err());
    }

    #[test]
    fn five_point_counts_and_ddp_hat() {
        let c = group_counts(&five_point()).unwrap();
        assert_eq!(
            c,
            GroupCounts {
                n1a: 2,
                n0a: 1,
                n1b: 1,
                n0b: 1
            }
        );
        assert_eq!(ddp_hat(&c), 2.0 / 3.0 - 1.0 / 2.0);
    }

    #[test]
    fn zero_margin_predicts_negative() {
        let m = MarginSet::new(vec![0.0, 0.0, 1.0], vec![1, -1, -1], None).unwrap();
        let c = group_counts(&m).unwrap();
        assert_eq!(c.n0a, 1);
        assert_eq!(c.n1b, 1);
        assert_eq!(c.n0b, 1);
    }

    #[test]
    fn single_group_is_a_data_error() {
        let m = MarginSet::new(vec![1.0, -1.0], vec![1, 1], None).unwrap();
        assert!(group_counts(&m).is_err());
        assert!(ddp_tilde(&m, Surrogate::Linear).is_err());
        assert!(gap(&m, Surrogate::Linear).is_err());
    }

    #[test]
    fn five_point_ddp_tilde_linear() {
        let v = ddp_tilde(&five_point(), Surrogate::Linear).unwrap();
        assert_abs_diff_eq!(v, 0.41666666666666663, epsilon = 1e-15);
    }

    #[test]
    fn five_point_ddp_tilde_sigmoid() {
        let v = ddp_tilde(&five_point(), Surrogate::Sigmoid).unwrap();
        assert_abs_diff_eq!(v, 0.07263273561188555, epsilon = 1e-14);
    }

    #[test]
    fn indicator_collapses_to_ddp_hat_exactly() {
        let m = five_point();
        let lhs = ddp_tilde(&m, Surrogate::Indicator).unwrap();
        let rhs = ddp_hat_from(&m).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn group_split_lambda_one_is_bit_identical_to_plain() {
        let m = five_point();
        for s in [Surrogate::Linear, Surrogate::Sigmoid, Surrogate::Hinge] {
            let plain = ddp_tilde(&m, s).unwrap();
            let split = ddp_tilde(&m, GroupSplitSurrogate::new(s, 1.0).unwrap()).unwrap();
            assert_eq!(plain.to_bits(), split.to_bits());
        }
    }

    #[test]
    fn five_point_gap_linear_both_routes() {
        let m = five_point();
        let direct = gap(&m, Surrogate::Linear).unwrap();
        assert_abs_diff_eq!(direct, -0.25, epsilon = 1e-15);
        let via_difference = ddp_hat_from(&m).unwrap() - ddp_tilde(&m, Surrogate::Linear).unwrap();
        assert_abs_diff_eq!(direct, via_difference, epsilon = 1e-12);
    }

    #[test]
    fn five_point_cov_hat_indicator() {
        let v = cov_hat(&five_point(), Surrogate::Indicator).unwrap();
        assert_abs_diff_eq!(v, 0.08, epsilon = 1e-14);
    }

    #[test]
    fn cov_hat_is_proportional_to_ddp_tilde() {
        let m = five_point();
        let factor = 2.0 * 3.0 * 2.0 / 25.0;
        for s in [
            Surrogate::Indicator,
            Surrogate::Linear,
            Surrogate::Hinge,
            Surrogate::Sigmoid,
            Surrogate::LogSigmoid,
        ] {
            let cov = cov_hat(&m, s).unwrap();
            let dt = ddp_tilde(&m, s).unwrap();
            assert_abs_diff_eq!(cov, factor * dt, epsilon = 1e-12);
        }
    }

    #[test]
    fn cov_hat_of_constant_surrogate_values_is_zero() {
        // All margins positive: the indicator is constant 1 over the set.
        let m = MarginSet::new(vec![3.0, 1.0, 0.5], vec![1, 1, -1], None).unwrap();
        let v = cov_hat(&m, Surrogate::Indicator).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn group_split_with_solved_lambda_reproduces_example() {
        // With lambda = 2 the split estimator equals ddp_hat on this set.
        let m = five_point();
        let s = GroupSplitSurrogate::new(Surrogate::Linear, 2.0).unwrap();
        let v = ddp_tilde(&m, s).unwrap();
        assert_abs_diff_eq!(v, ddp_hat_from(&m).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn variance_forms_match_frozen_values() {
        assert_abs_diff_eq!(
            variance_exact(0.5, 0.5, 100, 100).unwrap(),
            0.005,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            variance_exact(0.3, 0.8, 120, 80).unwrap(),
            0.00375,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            variance_substituted(0.3, 120, 80).unwrap(),
            0.004375,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            variance_bound(120, 80).unwrap(),
            0.005208333333333334,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(variance_exact(0.0, 0.0, 10, 10).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(variance_bound(1, 1).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn variance_exact_never_exceeds_bound() {
        for i in 0..=10 {
            for j in 0..=10 {
                let (pa, pb) = (i as f64 / 10.0, j as f64 / 10.0);
                let e = variance_exact(pa, pb, 37, 12).unwrap();
                let b = variance_bound(37, 12).unwrap();
                assert!(e <= b + 1e-15, "exact {e} > bound {b} at ({pa}, {pb})");
            }
        }
        // Equality exactly at pa = pb = 1/2.
        assert_abs_diff_eq!(
            variance_exact(0.5, 0.5, 37, 12).unwrap(),
            variance_bound(37, 12).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn variance_rejects_bad_arguments() {
        assert!(variance_exact(-0.1, 0.5, 10, 10).is_err());
        assert!(variance_exact(0.5, 1.1, 10, 10).is_err());
        assert!(variance_exact(0.5, 0.5, 0, 10).is_err());
        assert!(variance_substituted(2.0, 10, 10).is_err());
        assert!(variance_bound(10, 0).is_err());
    }

    #[test]
    fn accuracy_counts_strict_positives() {
        assert_eq!(
            accuracy(&with_labels(vec![1.0, -1.0], vec![1, -1], vec![1, 0])).unwrap(),
            1.0
        );
        assert_eq!(accuracy(&with_labels(vec![0.0], vec![1], vec![0])).unwrap(), 1.0);
        assert_eq!(accuracy(&with_labels(vec![0.0], vec![1], vec![1])).unwrap(), 0.0);
        assert_eq!(
            accuracy(&with_labels(
                vec![2.0, 2.0, -2.0, 2.0],
                vec![1, 1, -1, -1],
                vec![1, 0, 0, 1]
            ))
            .unwrap(),
            0.75
        );
        let unlabeled = five_point();
        assert!(accuracy(&unlabeled).is_err());
    }

    #[test]
    fn confusion_cells_follow_actual_predicted_convention() {
        // One row per (y, pred) combination, all in group a, plus one row in
        // group b so the group split is visible.
        let m = with_labels(
            vec![1.0, -1.0, 1.0, -1.0, 3.0],
            vec![1, 1, 1, 1, -1],
            vec![1, 1, 0, 0, 0],
        );
        let c = confusion_by_group(&m).unwrap();
        assert_eq!(c.a.tp, 1);
        assert_eq!(c.a.tn, 1); // actual +1 predicted -1
        assert_eq!(c.a.fp, 1);
        assert_eq!(c.a.fn_, 1); // actual -1 predicted -1
        assert_eq!(c.b.fp, 1);
        assert_eq!(c.b.tp + c.b.tn + c.b.fn_, 0);
        let total = c.a.tp + c.a.tn + c.a.fp + c.a.fn_ + c.b.tp + c.b.tn + c.b.fp + c.b.fn_;
        assert_eq!(total, m.n());
    }

    #[test]
    fn boxplot_cell_flags_the_far_point() {
        let m = MarginSet::new(vec![1.0, 2.0, 3.0, 4.0, 100.0], vec![1, 1, 1, 1, 1], None)
            .unwrap();
        // Single-group input is fine here; the op has no cross-group part.
        let stats = large_margin_stats(&m).unwrap();
        assert_eq!(stats.cells.len(), 1);
        let cell = &stats.cells[0];
        assert_eq!((cell.group, cell.predicted), (1, 1));
        assert_abs_diff_eq!(cell.q1, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cell.median, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cell.q3, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cell.lo_fence, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cell.hi_fence, 7.0, epsilon = 1e-12);
        assert_eq!(cell.n_outliers, 1);
        assert_eq!(stats.total_outliers, 1);
        assert_abs_diff_eq!(stats.outlier_rate(), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn boxplot_constant_cell_has_no_outliers() {
        let m = MarginSet::new(vec![2.0, 2.0, 2.0, -1.0], vec![1, 1, 1, -1], None).unwrap();
        let stats = large_margin_stats(&m).unwrap();
        let cell = stats.cells.iter().find(|c| c.group == 1).unwrap();
        assert_eq!(cell.n_outliers, 0);
        assert_abs_diff_eq!(cell.q3 - cell.q1, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn boxplot_skips_empty_cells() {
        let m = MarginSet::new(vec![1.0, 2.0, 0.5, -3.0], vec![1, 1, 1, -1], None).unwrap();
        let stats = large_margin_stats(&m).unwrap();
        // Group a has only positive predictions, group b only negative.
        assert_eq!(stats.cells.len(), 2);
    }

    #[test]
    fn boxplot_csv_export_has_fixed_columns() {
        let m = MarginSet::new(vec![1.0, 2.0, -0.5], vec![1, 1, -1], None).unwrap();
        let stats = large_margin_stats(&m).unwrap();
        let mut buf = Vec::new();
        stats.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "group,predicted,q1,median,q3,lo_fence,hi_fence,n,n_outliers"
        );
        assert_eq!(lines.count(), stats.cells.len());
    }

    /// Brute-force evaluation of the proxy sum written independently of the
    /// production code path.
    fn proxy_oracle(
        margins: &[f64],
        y_pm: &[i8],
        z: &[i8],
        def: MistreatmentDefinition,
        s: Surrogate,
    ) -> f64 {
        let keep: Vec<usize> = (0..y_pm.len())
            .filter(|&i| match def {
                MistreatmentDefinition::Omr => true,
                MistreatmentDefinition::Fpr | MistreatmentDefinition::BalanceNeg => y_pm[i] == -1,
                MistreatmentDefinition::Fnr | MistreatmentDefinition::BalancePos => y_pm[i] == 1,
            })
            .collect();
        let z_bar = keep.iter().map(|&i| z[i] as f64).sum::<f64>() / keep.len() as f64;
        let g = |i: usize| match def {
            MistreatmentDefinition::Omr => (y_pm[i] as f64 * margins[i]).min(0.0),
            MistreatmentDefinition::Fpr => (-margins[i]).min(0.0),
            MistreatmentDefinition::Fnr => margins[i].min(0.0),
            MistreatmentDefinition::BalancePos | MistreatmentDefinition::BalanceNeg => margins[i],
        };
        keep.iter()
            .map(|&i| (z[i] as f64 - z_bar) * surrogates::eval(s, g(i)))
            .sum::<f64>()
            / margins.len() as f64
    }

    #[test]
    fn proxies_match_brute_force_sum() {
        let margins = vec![0.7, -1.2, 2.0, -0.3, 0.1, -2.5, 1.4, -0.9];
        let labels = vec![1u8, 1, 0, 0, 1, 0, 0, 1];
        let z = vec![1i8, -1, 1, -1, -1, 1, -1, 1];
        let y_pm: Vec<i8> = labels.iter().map(|&v| if v == 1 { 1 } else { -1 }).collect();
        let m = with_labels(margins.clone(), z.clone(), labels);
        for def in [
            MistreatmentDefinition::Omr,
            MistreatmentDefinition::Fpr,
            MistreatmentDefinition::Fnr,
            MistreatmentDefinition::BalancePos,
            MistreatmentDefinition::BalanceNeg,
        ] {
            for s in [Surrogate::Linear, Surrogate::Sigmoid, Surrogate::Hinge] {
                let got = mistreatment_proxy(&m, def, s).unwrap();
                let want = proxy_oracle(&margins, &y_pm, &z, def, s);
                assert_abs_diff_eq!(got, want, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn perfectly_classified_error_proxies_vanish() {
        // Every prediction correct: g = 0 for omr/fpr/fnr, so with the
        // linear surrogate each proxy is 0.
        let m = with_labels(
            vec![1.0, 2.0, -1.0, -0.5],
            vec![1, -1, 1, -1],
            vec![1, 1, 0, 0],
        );
        for def in [
            MistreatmentDefinition::Omr,
            MistreatmentDefinition::Fpr,
            MistreatmentDefinition::Fnr,
        ] {
            let v = mistreatment_proxy(&m, def, Surrogate::Linear).unwrap();
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn omr_proxy_vanishes_for_constant_margin_and_equal_rates() {
        // |d| constant and misclassification rates equal across groups (2 of
        // 4 in each): the group means of min(0, y d) agree and the proxy is
        // zero.
        let m = with_labels(
            vec![1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
            vec![1, 1, 1, 1, -1, -1, -1, -1],
            vec![1, 0, 1, 0, 0, 1, 1, 0],
        );
        let v = mistreatment_proxy(&m, MistreatmentDefinition::Omr, Surrogate::Linear).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn empty_subset_is_a_data_error() {
        let m = with_labels(vec![1.0, 2.0], vec![1, -1], vec![1, 1]);
        assert!(mistreatment_proxy(&m, MistreatmentDefinition::Fpr, Surrogate::Linear).is_err());
    }

    #[test]
    fn definition_names_parse() {
        for (name, def) in [
            ("omr", MistreatmentDefinition::Omr),
            ("fpr", MistreatmentDefinition::Fpr),
            ("fnr", MistreatmentDefinition::Fnr),
            ("balance_pos", MistreatmentDefinition::BalancePos),
            ("balance_neg", MistreatmentDefinition::BalanceNeg),
        ] {
            assert_eq!(name.parse::<MistreatmentDefinition>().unwrap(), def);
        }
        assert!("eodds".parse::<MistreatmentDefinition>().is_err());
    }
}
