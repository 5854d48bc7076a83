//! Synthetic benchmark generators.
//!
//! Three seeded generators emit raw CSV tables shaped like the census
//! income, bank marketing, and recidivism benchmarks: same row counts,
//! group ratios, and label imbalance, with feature families chosen so an
//! unconstrained logistic fit lands near the published accuracy and
//! disparity operating points. The tables go through the ordinary ingest
//! path (schema JSON plus CSV), so experiments run end to end exactly as
//! they would on real data dropped into the same layout.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{DatasetSchema, RawTable};
use crate::error::{Error, Result};

/// Which benchmark shape to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthDataset {
    AdultLike,
    BankLike,
    CompasLike,
}

impl std::fmt::Display for SynthDataset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SynthDataset::AdultLike => "adult-like",
            SynthDataset::BankLike => "bank-like",
            SynthDataset::CompasLike => "compas-like",
        })
    }
}

impl std::str::FromStr for SynthDataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adult-like" | "adult" => Ok(SynthDataset::AdultLike),
            "bank-like" | "bank" => Ok(SynthDataset::BankLike),
            "compas-like" | "compas" => Ok(SynthDataset::CompasLike),
            other => Err(Error::Config(format!(
                "unknown synthetic dataset {other:?}; expected adult-like, bank-like, or compas-like"
            ))),
        }
    }
}

/// Paths written by [`SynthDataset::write`].
#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub csv: PathBuf,
    pub schema: PathBuf,
}

impl SynthDataset {
    /// Row count matching the benchmark the generator mirrors.
    pub fn default_rows(self) -> usize {
        match self {
            SynthDataset::AdultLike => 48_842,
            SynthDataset::BankLike => 41_188,
            SynthDataset::CompasLike => 5_278,
        }
    }

    /// Schema describing the generated CSV.
    pub fn schema(self) -> DatasetSchema {
        let strs = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        match self {
            SynthDataset::AdultLike => DatasetSchema {
                label_column: "income".into(),
                positive_label_values: strs(&[">50K"]),
                sensitive_column: "sex".into(),
                protected_value: "Male".into(),
                numeric_columns: strs(&["age", "education_num", "hours_per_week", "capital_gain"]),
                categorical_columns: strs(&["workclass", "occupation"]),
                include_sensitive_as_feature: false,
                missing_values: strs(&["", "?"]),
            },
            // Age feeds only the band column; leaving it out of the features
            // mirrors the income table's handling of sex.
            SynthDataset::BankLike => DatasetSchema {
                label_column: "subscribed".into(),
                positive_label_values: strs(&["yes"]),
                sensitive_column: "age_band".into(),
                protected_value: "25-60".into(),
                numeric_columns: strs(&["balance", "duration", "campaign"]),
                categorical_columns: strs(&["contact", "poutcome"]),
                include_sensitive_as_feature: false,
                missing_values: strs(&["", "?"]),
            },
            SynthDataset::CompasLike => DatasetSchema {
                label_column: "two_year_recid".into(),
                positive_label_values: strs(&["1"]),
                sensitive_column: "race".into(),
                protected_value: "African-American".into(),
                numeric_columns: strs(&["priors_count", "age", "juv_fel_count"]),
                categorical_columns: strs(&["charge_degree"]),
                include_sensitive_as_feature: false,
                missing_values: strs(&["", "?"]),
            },
        }
    }

    /// Generate `rows` rows deterministically from `seed`.
    pub fn generate(self, rows: usize, seed: u64) -> RawTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(match self {
            SynthDataset::AdultLike => 101,
            SynthDataset::BankLike => 102,
            SynthDataset::CompasLike => 103,
        });
        let mut table = match self {
            SynthDataset::AdultLike => adult_like(rows, &mut rng),
            SynthDataset::BankLike => bank_like(rows, &mut rng),
            SynthDataset::CompasLike => compas_like(rows, &mut rng),
        };
        // Shuffle row order so the file carries no block structure.
        for i in (1..table.rows.len()).rev() {
            let j = rng.random_range(0..=i);
            table.rows.swap(i, j);
        }
        table
    }

    /// Write `<name>.csv` and `<name>.schema.json` under `dir`.
    pub fn write(self, rows: usize, seed: u64, dir: &Path) -> Result<SynthFiles> {
        let table = self.generate(rows, seed);
        let csv_path = dir.join(format!("{self}.csv"));
        let mut w = csv::Writer::from_path(&csv_path)?;
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        let schema_path = dir.join(format!("{self}.schema.json"));
        let text = serde_json::to_string_pretty(&self.schema())?;
        std::fs::write(&schema_path, text)?;
        Ok(SynthFiles {
            csv: csv_path,
            schema: schema_path,
        })
    }
}

fn sigmoid(x: f64) -> f64 {
    crate::surrogates::sigmoid(x)
}

fn normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    mean + sd * rng.sample::<f64, _>(StandardNormal)
}

fn clip_int(x: f64, lo: i64, hi: i64) -> i64 {
    (x.round() as i64).clamp(lo, hi)
}

fn pick_index(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let mut u = rng.random::<f64>();
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    probs.len() - 1
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> i64 {
    rng.sample(rand_distr::Poisson::new(mean).expect("positive poisson mean")) as i64
}

/// Census-income shape: 48842 rows, 32650 with z = +1 ("Male").
///
/// Capital gain is the disparity channel: the favored group receives common
/// moderate log-normal gains while the other group receives rare, much
/// larger ones, tuned so the raw group means of the column coincide. An
/// hours spike at 40 with part-time and overtime lobes, plus group-skewed
/// occupation shares, shape the margin distribution; the 88-hour lobe and
/// the gain lumps supply the large-margin tail. About 0.4% of rows carry a
/// "?" workclass and drop during cleaning.
fn adult_like(rows: usize, rng: &mut ChaCha8Rng) -> RawTable {
    const GROUP_A_FRACTION: f64 = 32_650.0 / 48_842.0;
    const EDU_P: [f64; 16] = [
        0.020, 0.025, 0.028, 0.027, 0.008, 0.008, 0.008, 0.006, 0.40, 0.26, 0.010, 0.008, 0.13,
        0.045, 0.005, 0.012,
    ];
    const WORKCLASSES: [&str; 6] = [
        "private",
        "self-emp-not-inc",
        "self-emp-inc",
        "gov",
        "without-pay",
        "?",
    ];
    const WORK_P: [f64; 6] = [0.72, 0.075, 0.045, 0.13, 0.026, 0.004];
    const WORK_EFFECT: [f64; 6] = [0.0, 0.10, 0.45, 0.05, -0.15, 0.0];
    const OCCUPATIONS: [&str; 6] = [
        "craft-repair",
        "exec-managerial",
        "prof-specialty",
        "sales",
        "service",
        "adm-clerical",
    ];
    const OCC_EFFECT: [f64; 6] = [0.3, 1.6, 1.1, 0.35, -0.8, -0.55];
    const OCC_P_MALE: [f64; 6] = [0.18, 0.29, 0.13, 0.13, 0.15, 0.12];
    const OCC_P_FEMALE: [f64; 6] = [0.05, 0.04, 0.16, 0.13, 0.12, 0.50];
    const HOURS_SPIKE: f64 = 0.62;
    const GAIN_P_MALE: f64 = 0.18;
    const GAIN_P_FEMALE: f64 = 0.00688;

    let n_a = (rows as f64 * GROUP_A_FRACTION).round() as usize;
    let header = vec![
        "age".to_string(),
        "education_num".to_string(),
        "hours_per_week".to_string(),
        "capital_gain".to_string(),
        "workclass".to_string(),
        "occupation".to_string(),
        "sex".to_string(),
        "income".to_string(),
    ];
    let mut out = Vec::with_capacity(rows);
    for i in 0..rows {
        let male = i < n_a;
        let age = if male {
            clip_int(normal(rng, 39.4, 13.4), 17, 90)
        } else {
            clip_int(normal(rng, 36.9, 14.0), 17, 90)
        };
        let edu = 1 + pick_index(rng, &EDU_P) as i64;
        let u = rng.random::<f64>();
        let (p_part, p_over, bulk_mu) = if male {
            (0.012, 0.022, 43.0)
        } else {
            (0.105, 0.012, 38.5)
        };
        let hours = if u < HOURS_SPIKE {
            40
        } else if u < HOURS_SPIKE + p_part {
            clip_int(normal(rng, 10.0, 3.5), 1, 20)
        } else if u < HOURS_SPIKE + p_part + p_over {
            clip_int(normal(rng, 88.0, 7.0), 72, 99)
        } else {
            clip_int(normal(rng, bulk_mu, 5.5), 30, 65)
        };
        let (gain_p, gain_mu, gain_sd) = if male {
            (GAIN_P_MALE, 8.1, 0.25)
        } else {
            (GAIN_P_FEMALE, 11.4, 0.12)
        };
        let gain = if rng.random::<f64>() < gain_p {
            clip_int(normal(rng, gain_mu, gain_sd).exp(), 114, 99_999)
        } else {
            0
        };
        let occ_p = if male { &OCC_P_MALE } else { &OCC_P_FEMALE };
        let occ = pick_index(rng, occ_p);
        let work = pick_index(rng, &WORK_P);
        let gain_term = if gain > 0 {
            4.5 + 0.5 * ((gain as f64).ln() - 8.6) / 1.2
        } else {
            0.0
        };
        let raw = 0.12 * (age as f64 - 38.5) / 13.6
            + 2.1 * (edu as f64 - 10.0) / 2.6
            + 1.1 * (hours as f64 - 40.0) / 12.3
            + gain_term
            + OCC_EFFECT[occ]
            + WORK_EFFECT[work]
            + if male { 0.25 } else { -0.25 }
            + normal(rng, 0.0, 1.32);
        let label = rng.random::<f64>() < sigmoid(1.35 * raw - 2.98);
        out.push(vec![
            age.to_string(),
            edu.to_string(),
            hours.to_string(),
            gain.to_string(),
            WORKCLASSES[work].to_string(),
            OCCUPATIONS[occ].to_string(),
            if male { "Male" } else { "Female" }.to_string(),
            if label { ">50K" } else { "<=50K" }.to_string(),
        ]);
    }
    RawTable { header, rows: out }
}

/// Bank-marketing shape: 41188 rows, about 16% outside the 25-60 age band
/// (z = -1, students and retirees).
///
/// Account balance is the disparity channel: retirees carry occasional large
/// severance-style deposits while in-band clients sit on a higher base
/// level, tuned so the group means of the column coincide. Call duration is
/// the main predictor; contact channel and previous-outcome shares differ
/// mildly by band. Age itself is written to the CSV but deliberately left
/// out of the feature schema, mirroring how the income table omits sex.
fn bank_like(rows: usize, rng: &mut ChaCha8Rng) -> RawTable {
    const P_YOUNG: f64 = 0.07;
    const P_OLD: f64 = 0.09;
    const RETIRE_P: f64 = 0.30;
    const RETIRE_MU: f64 = 9_000.0;
    const RETIRE_SD: f64 = 1_200.0;
    const BAL_OUT_MU: f64 = 1_200.0;
    const BAL_SD: f64 = 750.0;
    // Out-of-band balance mean including the retiree lumps equals this
    // in-band base level exactly: frac_old * RETIRE_P * RETIRE_MU above base.
    const BAL_IN_MU: f64 = BAL_OUT_MU + (P_OLD / (P_YOUNG + P_OLD)) * RETIRE_P * RETIRE_MU;

    let header = vec![
        "age".to_string(),
        "duration".to_string(),
        "campaign".to_string(),
        "balance".to_string(),
        "contact".to_string(),
        "poutcome".to_string(),
        "age_band".to_string(),
        "subscribed".to_string(),
    ];
    let mut out = Vec::with_capacity(rows);
    for _ in 0..rows {
        let u = rng.random::<f64>();
        let (age, old) = if u < P_YOUNG {
            (clip_int(normal(rng, 22.0, 1.8), 18, 24), false)
        } else if u < P_YOUNG + P_OLD {
            (clip_int(normal(rng, 66.0, 4.0), 61, 92), true)
        } else {
            (clip_int(normal(rng, 40.5, 8.2), 25, 60), false)
        };
        let in_band = (25..=60).contains(&age);
        let duration = clip_int(normal(rng, 5.35, 0.58).exp(), 5, 1500);
        let campaign = clip_int(normal(rng, 2.5, 1.7), 1, 20);
        let base_mu = if in_band { BAL_IN_MU } else { BAL_OUT_MU };
        let mut balance = normal(rng, base_mu, BAL_SD).round() as i64;
        if old && rng.random::<f64>() < RETIRE_P {
            balance += normal(rng, RETIRE_MU, RETIRE_SD).round() as i64;
        }
        let balance = balance.clamp(-1_500, 30_000);
        let cellular = rng.random::<f64>() < if in_band { 0.62 } else { 0.78 };
        let succ_p = if in_band { 0.030 } else { 0.062 };
        let up = rng.random::<f64>();
        let poutcome = if up < succ_p {
            "success"
        } else if up < succ_p + 0.105 {
            "failure"
        } else {
            "nonexistent"
        };
        let raw = 1.55 * (duration as f64 - 230.0) / 210.0
            - 0.12 * (campaign as f64 - 2.5) / 1.7
            + if cellular { 0.25 } else { 0.0 }
            + match poutcome {
                "success" => 2.30,
                "failure" => 0.40,
                _ => 0.0,
            }
            + 2.70 * (balance as f64 - 2_700.0) / 8_000.0
            + normal(rng, 0.0, 0.50);
        let label = rng.random::<f64>() < sigmoid(1.35 * raw - 3.70);
        out.push(vec![
            age.to_string(),
            duration.to_string(),
            campaign.to_string(),
            balance.to_string(),
            if cellular { "cellular" } else { "telephone" }.to_string(),
            poutcome.to_string(),
            if in_band { "25-60" } else { "other" }.to_string(),
            if label { "yes" } else { "no" }.to_string(),
        ]);
    }
    RawTable { header, rows: out }
}

/// Recidivism shape: 5278 rows, 3175 with z = +1 ("African-American"), the
/// table already restricted to two race values.
///
/// Prior counts are the disparity channel, built from record-profile lobes.
/// Both groups mix a clean-record lobe with a short mid lobe; the first
/// group adds a common 5-12 lobe among its younger defendants, and both
/// carry rare double-digit tails that supply the large-margin outliers and
/// keep the raw column means close. The clean-record lobes skew older, so
/// the group age means stay within a few years of each other. Juvenile
/// counts and charge degree add small visible shifts. Labels stay close to
/// a coin flip, as recidivism outcomes do.
fn compas_like(rows: usize, rng: &mut ChaCha8Rng) -> RawTable {
    const GROUP_A_FRACTION: f64 = 3_175.0 / 5_278.0;
    // Subgroup cuts: clean record, short mid lobe, 5-12 lobe, extreme tail.
    const A_CUTS: [f64; 3] = [0.30, 0.72, 0.93];
    const A_MID_MU: f64 = 1.0;
    const A_BUMP_BASE: i64 = 5;
    const A_BUMP_MU: f64 = 2.2;
    const A_TAIL_BASE: i64 = 14;
    const A_TAIL_MU: f64 = 8.0;
    // Clean record, short mid lobe, extreme tail.
    const B_CUTS: [f64; 2] = [0.44, 0.88];
    const B_MID_MU: f64 = 0.7;
    const B_TAIL_BASE: i64 = 13;
    const B_TAIL_MU: f64 = 6.0;
    const A_AGE: [(f64, f64); 4] = [(43.0, 11.0), (28.0, 8.0), (27.0, 7.0), (30.0, 8.0)];
    const B_AGE: [(f64, f64); 3] = [(41.0, 11.0), (35.0, 10.0), (36.0, 9.0)];

    let n_a = (rows as f64 * GROUP_A_FRACTION).round() as usize;
    let header = vec![
        "priors_count".to_string(),
        "age".to_string(),
        "juv_fel_count".to_string(),
        "charge_degree".to_string(),
        "race".to_string(),
        "two_year_recid".to_string(),
    ];
    let mut out = Vec::with_capacity(rows);
    for i in 0..rows {
        let aa = i < n_a;
        let u = rng.random::<f64>();
        // Outcomes are least predictable in the 5-12 lobe, so it carries
        // extra label noise on top of the shared base level.
        let (priors, (age_mu, age_sd), eps_sd) = if aa {
            if u < A_CUTS[0] {
                (0, A_AGE[0], 1.50)
            } else if u < A_CUTS[1] {
                (1 + poisson(rng, A_MID_MU), A_AGE[1], 1.50)
            } else if u < A_CUTS[2] {
                (A_BUMP_BASE + poisson(rng, A_BUMP_MU), A_AGE[2], 2.60)
            } else {
                (A_TAIL_BASE + poisson(rng, A_TAIL_MU), A_AGE[3], 1.50)
            }
        } else if u < B_CUTS[0] {
            (0, B_AGE[0], 1.50)
        } else if u < B_CUTS[1] {
            (1 + poisson(rng, B_MID_MU), B_AGE[1], 1.50)
        } else {
            (B_TAIL_BASE + poisson(rng, B_TAIL_MU), B_AGE[2], 1.50)
        };
        let priors = priors.min(38);
        let age = clip_int(normal(rng, age_mu, age_sd), 18, 70);
        let juv = poisson(rng, if aa { 0.13 } else { 0.05 }).min(5);
        let felony = rng.random::<f64>() < if aa { 0.65 } else { 0.59 };
        let raw = 1.20 * (priors as f64 - 3.2) / 4.0
            - 0.62 * (age as f64 - 34.5) / 11.0
            + 0.45 * (juv.min(3) as f64)
            + if felony { 0.28 } else { 0.0 }
            + normal(rng, 0.0, eps_sd);
        let label = rng.random::<f64>() < sigmoid(1.30 * raw - 0.26);
        out.push(vec![
            priors.to_string(),
            age.to_string(),
            juv.to_string(),
            if felony { "F" } else { "M" }.to_string(),
            if aa { "African-American" } else { "Caucasian" }.to_string(),
            if label { "1" } else { "0" }.to_string(),
        ]);
    }
    RawTable { header, rows: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{self, SplitSpec};

    #[test]
    fn default_rows_match_benchmark_sizes() {
        assert_eq!(SynthDataset::AdultLike.default_rows(), 48_842);
        assert_eq!(SynthDataset::BankLike.default_rows(), 41_188);
        assert_eq!(SynthDataset::CompasLike.default_rows(), 5_278);
    }

    #[test]
    fn names_round_trip() {
        for d in [
            SynthDataset::AdultLike,
            SynthDataset::BankLike,
            SynthDataset::CompasLike,
        ] {
            let back: SynthDataset = d.to_string().parse().unwrap();
            assert_eq!(back, d);
        }
        assert!("mnist".parse::<SynthDataset>().is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = SynthDataset::CompasLike.generate(500, 9);
        let b = SynthDataset::CompasLike.generate(500, 9);
        assert_eq!(a, b);
        let c = SynthDataset::CompasLike.generate(500, 10);
        assert_ne!(a, c);
    }

    #[test]
    fn group_counts_match_the_stated_ratios() {
        let table = SynthDataset::AdultLike.generate(48_842, 0);
        let males = table
            .rows
            .iter()
            .filter(|r| r[6] == "Male")
            .count();
        assert_eq!(males, 32_650);

        let table = SynthDataset::CompasLike.generate(5_278, 0);
        let aa = table
            .rows
            .iter()
            .filter(|r| r[4] == "African-American")
            .count();
        assert_eq!(aa, 3_175);

        let table = SynthDataset::BankLike.generate(41_188, 0);
        let outside = table
            .rows
            .iter()
            .filter(|r| r[6] == "other")
            .count();
        let frac = outside as f64 / 41_188.0;
        assert!((0.14..=0.18).contains(&frac), "outside-band fraction {frac}");
    }

    #[test]
    fn written_files_load_through_the_ingest_path() {
        let dir = tempfile::tempdir().unwrap();
        for d in [
            SynthDataset::AdultLike,
            SynthDataset::BankLike,
            SynthDataset::CompasLike,
        ] {
            let files = d.write(2_000, 4, dir.path()).unwrap();
            let schema = DatasetSchema::from_json_file(&files.schema).unwrap();
            let spec = SplitSpec::new(0.70, 0.05, 0.25, 4).unwrap();
            let splits = dataset::load_split_encode(&files.csv, &schema, &spec).unwrap();
            assert!(splits.train.n() > 1_000);
            assert!(splits.validation.n() > 0);
            assert!(splits.test.n() > 0);
            let (na, nb) = splits.train.group_sizes();
            assert!(na > 0 && nb > 0);
        }
    }

    #[test]
    fn adult_like_emits_some_missing_cells_and_heavy_gains() {
        let table = SynthDataset::AdultLike.generate(20_000, 1);
        let missing = table.rows.iter().filter(|r| r[4] == "?").count();
        assert!(missing > 0, "expected a few missing workclass cells");
        assert!((missing as f64) < 0.02 * 20_000.0);
        let big_gain = table
            .rows
            .iter()
            .filter(|r| r[3].parse::<i64>().unwrap() > 10_000)
            .count();
        assert!(big_gain > 20, "heavy tail should produce large gains");
    }

    #[test]
    fn label_rates_sit_in_expected_bands() {
        let adult = SynthDataset::AdultLike.generate(20_000, 2);
        let pos = adult.rows.iter().filter(|r| r[7] == ">50K").count() as f64 / 20_000.0;
        assert!((0.15..=0.35).contains(&pos), "adult-like positive rate {pos}");

        let bank = SynthDataset::BankLike.generate(20_000, 2);
        let pos = bank.rows.iter().filter(|r| r[7] == "yes").count() as f64 / 20_000.0;
        assert!((0.08..=0.15).contains(&pos), "bank-like positive rate {pos}");

        let compas = SynthDataset::CompasLike.generate(20_000, 2);
        let pos = compas.rows.iter().filter(|r| r[5] == "1").count() as f64 / 20_000.0;
        assert!((0.35..=0.60).contains(&pos), "compas-like positive rate {pos}");
    }
}
