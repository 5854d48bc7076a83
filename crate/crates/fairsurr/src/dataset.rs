//! CSV ingest, preprocessing, splitting, and group resampling.
//!
//! The pipeline goes string table -> cleaned table -> encoded dataset:
//!
//! 1. [`RawTable`] holds the parsed CSV (header + string cells, trimmed).
//! 2. [`RawTable::clean`] drops rows with a missing cell in any column the
//!    schema uses and reports how many were dropped.
//! 3. [`Recipe::fit`] records per-column means/stds for numeric columns and
//!    sorted category lists for categorical columns. Numeric statistics can
//!    be fitted on a row subset (the training rows) so validation and test
//!    rows are standardized with training statistics; category lists are
//!    always taken from the whole table so the one-hot layout is stable.
//! 4. [`encode`] applies a recipe, producing a [`Dataset`] with standardized
//!    numeric columns followed by one-hot blocks.
//!
//! [`load_csv`] is the single-table convenience (fit on all rows, encode);
//! [`load_split_encode`] is the leakage-free experiment path (split first,
//! fit numeric statistics on the training rows only).

use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_missing_tokens() -> Vec<String> {
    vec![String::new(), "?".to_string()]
}

/// Column roles and value mappings for one CSV layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    pub label_column: String,
    /// Label cell values mapped to 1; everything else maps to 0.
    pub positive_label_values: Vec<String>,
    pub sensitive_column: String,
    /// Sensitive cell value mapped to z = +1; everything else maps to -1.
    pub protected_value: String,
    #[serde(default)]
    pub numeric_columns: Vec<String>,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
    /// When false (the default) the sensitive column must not appear among
    /// the feature columns; set it to also feed z to the model.
    #[serde(default)]
    pub include_sensitive_as_feature: bool,
    /// Cell values (after trimming) treated as missing; rows containing one
    /// in a used column are dropped.
    #[serde(default = "default_missing_tokens")]
    pub missing_values: Vec<String>,
}

impl DatasetSchema {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut text = String::new();
        File::open(path.as_ref())?.read_to_string(&mut text)?;
        let schema: DatasetSchema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    /// Columns the schema reads (label, sensitive, features).
    fn used_columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = vec![&self.label_column, &self.sensitive_column];
        cols.extend(self.numeric_columns.iter().map(String::as_str));
        cols.extend(self.categorical_columns.iter().map(String::as_str));
        cols.dedup();
        cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.numeric_columns.is_empty() && self.categorical_columns.is_empty() {
            return Err(Error::Config("schema lists no feature columns".into()));
        }
        let mut seen = HashSet::new();
        for name in self
            .numeric_columns
            .iter()
            .chain(self.categorical_columns.iter())
        {
            if !seen.insert(name.as_str()) {
                return Err(Error::Config(format!(
                    "column {name:?} listed as a feature twice"
                )));
            }
            if *name == self.label_column {
                return Err(Error::Config(format!(
                    "label column {name:?} cannot also be a feature"
                )));
            }
            if *name == self.sensitive_column && !self.include_sensitive_as_feature {
                return Err(Error::Config(format!(
                    "sensitive column {name:?} listed as a feature without \
                     include_sensitive_as_feature"
                )));
            }
        }
        if self.label_column == self.sensitive_column {
            return Err(Error::Config(
                "label and sensitive columns must differ".into(),
            ));
        }
        Ok(())
    }
}

/// A parsed CSV: header plus string cells, one `Vec<String>` per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path.as_ref())?;
        Self::from_reader(file)
    }

    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.to_string())
            .collect();
        if header.len() < 2 {
            return Err(Error::Data(format!(
                "table needs at least 2 columns, got {}",
                header.len()
            )));
        }
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            rows.push(record.iter().map(|c| c.to_string()).collect());
        }
        Ok(RawTable { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("column {name:?} not found in header")))
    }

    /// Drop rows with a missing cell in any column the schema uses; returns
    /// the cleaned table and the number of rows removed.
    pub fn clean(&self, schema: &DatasetSchema) -> Result<(RawTable, usize)> {
        let used: Vec<usize> = schema
            .used_columns()
            .iter()
            .map(|c| self.column_index(c))
            .collect::<Result<_>>()?;
        let missing: HashSet<&str> = schema.missing_values.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .filter(|row| !used.iter().any(|&i| missing.contains(row[i].as_str())))
            .cloned()
            .collect();
        let dropped = self.rows.len() - rows.len();
        Ok((
            RawTable {
                header: self.header.clone(),
                rows,
            },
            dropped,
        ))
    }

    /// Sensitive attribute vector (protected value -> +1, else -1).
    pub fn sensitive_vector(&self, schema: &DatasetSchema) -> Result<Vec<i8>> {
        let col = self.column_index(&schema.sensitive_column)?;
        Ok(self
            .rows
            .iter()
            .map(|row| if row[col] == schema.protected_value { 1 } else { -1 })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericStat {
    pub name: String,
    pub mean: f64,
    /// Population standard deviation over the fit rows.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMap {
    pub name: String,
    /// Sorted distinct values; the one-hot block has one column per entry.
    pub categories: Vec<String>,
}

/// Fitted preprocessing state: standardization statistics and one-hot
/// category lists. Persisted as JSON alongside experiment outputs so new
/// rows can be encoded with the exact training-time layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub numeric: Vec<NumericStat>,
    pub categorical: Vec<CategoryMap>,
}

impl Recipe {
    /// Fit a recipe on `table`. Numeric means/stds use `numeric_fit_rows`
    /// when given (otherwise all rows); category lists always use all rows.
    pub fn fit(
        table: &RawTable,
        schema: &DatasetSchema,
        numeric_fit_rows: Option<&[usize]>,
    ) -> Result<Self> {
        if table.rows.is_empty() {
            return Err(Error::Data("cannot fit a recipe on an empty table".into()));
        }
        let all_rows: Vec<usize>;
        let fit_rows = match numeric_fit_rows {
            Some(rows) => rows,
            None => {
                all_rows = (0..table.rows.len()).collect();
                &all_rows
            }
        };
        if fit_rows.is_empty() {
            return Err(Error::Data("numeric fit row set is empty".into()));
        }

        let mut numeric = Vec::with_capacity(schema.numeric_columns.len());
        for name in &schema.numeric_columns {
            let col = table.column_index(name)?;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for &r in fit_rows {
                let v = parse_numeric(&table.rows[r][col], name, r)?;
                sum += v;
                sum_sq += v * v;
            }
            let n = fit_rows.len() as f64;
            let mean = sum / n;
            let var = (sum_sq / n - mean * mean).max(0.0);
            let std = var.sqrt();
            if std == 0.0 {
                return Err(Error::Data(format!(
                    "numeric column {name:?} is degenerate (single distinct value)"
                )));
            }
            numeric.push(NumericStat {
                name: name.clone(),
                mean,
                std,
            });
        }

        let mut categorical = Vec::with_capacity(schema.categorical_columns.len());
        for name in &schema.categorical_columns {
            let col = table.column_index(name)?;
            let mut values: Vec<String> = table
                .rows
                .iter()
                .map(|row| row[col].clone())
                .collect::<HashSet<_>>()
                .into_iter()
                .collect();
            values.sort();
            if values.len() < 2 {
                return Err(Error::Data(format!(
                    "categorical column {name:?} is degenerate (single distinct value)"
                )));
            }
            categorical.push(CategoryMap {
                name: name.clone(),
                categories: values,
            });
        }

        Ok(Recipe {
            numeric,
            categorical,
        })
    }

    pub fn to_json_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path.as_ref())?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut text = String::new();
        File::open(path.as_ref())?.read_to_string(&mut text)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Number of feature columns a dataset encoded with this recipe has.
    pub fn dim(&self) -> usize {
        self.numeric.len() + self.categorical.iter().map(|c| c.categories.len()).sum::<usize>()
    }
}

fn parse_numeric(cell: &str, column: &str, row: usize) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| {
        Error::Data(format!(
            "cannot parse {cell:?} in column {column:?} (row {row}) as a number"
        ))
    })?;
    if !v.is_finite() {
        return Err(Error::Data(format!(
            "non-finite value in column {column:?} (row {row})"
        )));
    }
    Ok(v)
}

/// An encoded dataset: standardized numerics plus one-hot blocks, binary
/// labels in {0, 1}, and the sensitive attribute in {-1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
    pub sensitive: Vec<i8>,
    pub feature_names: Vec<String>,
    /// Rows dropped for missing cells by the load that built this dataset;
    /// derived datasets (splits, resamples) report 0.
    pub n_dropped: usize,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Labels remapped to {-1, +1} (0 -> -1) for margin-based code.
    pub fn labels_pm(&self) -> Vec<i8> {
        self.labels.iter().map(|&y| if y == 1 { 1 } else { -1 }).collect()
    }

    /// (group a size, group b size) where group a is z = +1.
    pub fn group_sizes(&self) -> (usize, usize) {
        let na = self.sensitive.iter().filter(|&&z| z == 1).count();
        (na, self.n() - na)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n() < 2 {
            return Err(Error::Data(format!("dataset needs N >= 2, got {}", self.n())));
        }
        if self.features.nrows() != self.n() || self.sensitive.len() != self.n() {
            return Err(Error::Data("row count mismatch across dataset fields".into()));
        }
        if self.features.ncols() != self.feature_names.len() {
            return Err(Error::Data("feature name count does not match width".into()));
        }
        if self.labels.iter().any(|&y| y > 1) {
            return Err(Error::Data("labels must be 0 or 1".into()));
        }
        if self.sensitive.iter().any(|&z| z != 1 && z != -1) {
            return Err(Error::Data("sensitive entries must be +1 or -1".into()));
        }
        let (na, nb) = self.group_sizes();
        if na == 0 || nb == 0 {
            return Err(Error::Data(format!(
                "both sensitive groups must be present, got {na}/{nb}"
            )));
        }
        Ok(())
    }

    fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            sensitive: idx.iter().map(|&i| self.sensitive[i]).collect(),
            feature_names: self.feature_names.clone(),
            n_dropped: 0,
        }
    }
}

/// Encode a cleaned table with a fitted recipe.
pub fn encode(table: &RawTable, schema: &DatasetSchema, recipe: &Recipe) -> Result<Dataset> {
    let n = table.rows.len();
    if n == 0 {
        return Err(Error::Data("cannot encode an empty table".into()));
    }
    let missing: HashSet<&str> = schema.missing_values.iter().map(String::as_str).collect();
    let label_col = table.column_index(&schema.label_column)?;
    let positive: HashSet<&str> = schema
        .positive_label_values
        .iter()
        .map(String::as_str)
        .collect();

    let mut feature_names = Vec::with_capacity(recipe.dim());
    for stat in &recipe.numeric {
        feature_names.push(stat.name.clone());
    }
    for map in &recipe.categorical {
        for cat in &map.categories {
            feature_names.push(format!("{}={}", map.name, cat));
        }
    }

    let mut features = Array2::<f64>::zeros((n, recipe.dim()));
    let numeric_cols: Vec<usize> = recipe
        .numeric
        .iter()
        .map(|s| table.column_index(&s.name))
        .collect::<Result<_>>()?;
    let categorical_cols: Vec<usize> = recipe
        .categorical
        .iter()
        .map(|m| table.column_index(&m.name))
        .collect::<Result<_>>()?;

    for (r, row) in table.rows.iter().enumerate() {
        let mut j = 0;
        for (stat, &col) in recipe.numeric.iter().zip(&numeric_cols) {
            let cell = row[col].as_str();
            if missing.contains(cell) {
                return Err(Error::Data(format!(
                    "missing cell in column {:?} (row {r}); clean the table first",
                    stat.name
                )));
            }
            let v = parse_numeric(cell, &stat.name, r)?;
            features[(r, j)] = (v - stat.mean) / stat.std;
            j += 1;
        }
        for (map, &col) in recipe.categorical.iter().zip(&categorical_cols) {
            let cell = row[col].as_str();
            if missing.contains(cell) {
                return Err(Error::Data(format!(
                    "missing cell in column {:?} (row {r}); clean the table first",
                    map.name
                )));
            }
            let k = map
                .categories
                .binary_search_by(|c| c.as_str().cmp(cell))
                .map_err(|_| {
                    Error::Data(format!(
                        "value {cell:?} in column {:?} (row {r}) not in the fitted categories",
                        map.name
                    ))
                })?;
            features[(r, j + k)] = 1.0;
            j += map.categories.len();
        }
    }

    let labels: Vec<u8> = table
        .rows
        .iter()
        .map(|row| u8::from(positive.contains(row[label_col].as_str())))
        .collect();
    let sensitive = table.sensitive_vector(schema)?;

    let data = Dataset {
        features,
        labels,
        sensitive,
        feature_names,
        n_dropped: 0,
    };
    data.validate()?;
    Ok(data)
}

/// Load a CSV, drop rows with missing cells, fit preprocessing on all
/// remaining rows, and encode. Standardized columns have zero mean and unit
/// variance over the loaded rows.
pub fn load_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let table = RawTable::from_csv_path(path)?;
    let (clean, dropped) = table.clean(schema)?;
    let recipe = Recipe::fit(&clean, schema, None)?;
    let mut data = encode(&clean, schema, &recipe)?;
    data.n_dropped = dropped;
    Ok(data)
}

/// Train/validation/test fractions and the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, validation: f64, test: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train_fraction: train,
            validation_fraction: validation,
            test_fraction: test,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("train", self.train_fraction),
            ("validation", self.validation_fraction),
            ("test", self.test_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!(
                    "{name} fraction must lie in (0, 1), got {f}"
                )));
            }
        }
        let sum = self.train_fraction + self.validation_fraction + self.test_fraction;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

const SPLIT_NAMES: [&str; 3] = ["train", "validation", "test"];

/// Apportion `n` into three sizes by largest remainder (ties broken in
/// train/validation/test order).
fn apportion(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let mut sizes = [0usize; 3];
    let mut remainders = [(0.0f64, 0usize); 3];
    let mut assigned = 0;
    for k in 0..3 {
        let exact = n as f64 * fractions[k];
        sizes[k] = exact.floor() as usize;
        remainders[k] = (exact - sizes[k] as f64, k);
        assigned += sizes[k];
    }
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for r in remainders.iter().take(n - assigned) {
        sizes[r.1] += 1;
    }
    sizes
}

/// Shuffle row indices and cut them into three blocks of apportioned sizes;
/// each block is returned sorted ascending. Errors (naming the offending
/// split) if a block misses a sensitive group.
fn split_indices(z: &[i8], spec: &SplitSpec) -> Result<[Vec<usize>; 3]> {
    spec.validate()?;
    let n = z.len();
    let min_frac = spec
        .train_fraction
        .min(spec.validation_fraction)
        .min(spec.test_fraction);
    if (n as f64) * min_frac < 1.0 {
        return Err(Error::Config(format!(
            "N = {n} is too small for the smallest fraction {min_frac}"
        )));
    }
    let sizes = apportion(
        n,
        [
            spec.train_fraction,
            spec.validation_fraction,
            spec.test_fraction,
        ],
    );
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let mut out: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut start = 0;
    for k in 0..3 {
        let mut idx: Vec<usize> = order[start..start + sizes[k]].to_vec();
        start += sizes[k];
        idx.sort_unstable();
        let na = idx.iter().filter(|&&i| z[i] == 1).count();
        if na == 0 || na == idx.len() {
            return Err(Error::Data(format!(
                "{} split would lose a sensitive group (sizes {}/{})",
                SPLIT_NAMES[k],
                na,
                idx.len() - na
            )));
        }
        out[k] = idx;
    }
    Ok(out)
}

/// Partition an encoded dataset into train/validation/test.
pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let [i_train, i_val, i_test] = split_indices(&data.sensitive, spec)?;
    Ok((
        data.select_rows(&i_train),
        data.select_rows(&i_val),
        data.select_rows(&i_test),
    ))
}

/// Two-way split for train/test-only protocols.
pub fn split_train_test(
    data: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = data.n();
    let n_train = ((n as f64) * train_fraction).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} leaves an empty split at N = {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut i_train: Vec<usize> = order[..n_train].to_vec();
    let mut i_test: Vec<usize> = order[n_train..].to_vec();
    i_train.sort_unstable();
    i_test.sort_unstable();
    for (name, idx) in [("train", &i_train), ("test", &i_test)] {
        let na = idx.iter().filter(|&&i| data.sensitive[i] == 1).count();
        if na == 0 || na == idx.len() {
            return Err(Error::Data(format!(
                "{name} split would lose a sensitive group"
            )));
        }
    }
    Ok((data.select_rows(&i_train), data.select_rows(&i_test)))
}

/// Outputs of the leakage-free ingest path.
#[derive(Debug, Clone)]
pub struct IngestedSplits {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub recipe: Recipe,
    /// Rows dropped for missing cells before splitting.
    pub n_dropped: usize,
}

/// Load a CSV, split first, fit numeric statistics on the training rows
/// only, then encode every split with that recipe.
pub fn load_split_encode(
    path: impl AsRef<Path>,
    schema: &DatasetSchema,
    spec: &SplitSpec,
) -> Result<IngestedSplits> {
    schema.validate()?;
    let table = RawTable::from_csv_path(path)?;
    let (clean, n_dropped) = table.clean(schema)?;
    let z = clean.sensitive_vector(schema)?;
    let [i_train, i_val, i_test] = split_indices(&z, spec)?;
    let recipe = Recipe::fit(&clean, schema, Some(&i_train))?;
    let full = encode(&clean, schema, &recipe)?;
    Ok(IngestedSplits {
        train: full.select_rows(&i_train),
        validation: full.select_rows(&i_val),
        test: full.select_rows(&i_test),
        recipe,
        n_dropped,
    })
}

/// How to equalize sensitive-group sizes on a training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResampleMode {
    /// Randomly delete majority-group rows until the groups match.
    DownsampleMajority,
    /// Randomly duplicate minority-group rows until the groups match.
    UpsampleMinorityFull,
    /// Append one extra copy of the whole minority group.
    UpsampleMinorityOneExtraCopy,
}

impl std::fmt::Display for ResampleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ResampleMode::DownsampleMajority => "downsample-majority",
            ResampleMode::UpsampleMinorityFull => "upsample-minority-full",
            ResampleMode::UpsampleMinorityOneExtraCopy => "upsample-minority-one-extra-copy",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for ResampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "downsample-majority" | "down" => Ok(ResampleMode::DownsampleMajority),
            "upsample-minority-full" | "up" => Ok(ResampleMode::UpsampleMinorityFull),
            "upsample-minority-one-extra-copy" | "one-extra-copy" => {
                Ok(ResampleMode::UpsampleMinorityOneExtraCopy)
            }
            other => Err(Error::Config(format!(
                "unknown resample mode {other:?} (expected downsample-majority, \
                 upsample-minority-full, or upsample-minority-one-extra-copy)"
            ))),
        }
    }
}

/// Equalize (or, for the one-extra-copy rule, shrink the imbalance of) the
/// sensitive groups by row resampling. Already-balanced input is returned
/// unchanged for every mode.
pub fn resample_balanced(train: &Dataset, mode: ResampleMode, seed: u64) -> Result<Dataset> {
    train.validate()?;
    let (na, nb) = train.group_sizes();
    if na == nb {
        return Ok(train.clone());
    }
    let minority_z: i8 = if na < nb { 1 } else { -1 };
    let minority: Vec<usize> = (0..train.n())
        .filter(|&i| train.sensitive[i] == minority_z)
        .collect();
    let majority: Vec<usize> = (0..train.n())
        .filter(|&i| train.sensitive[i] != minority_z)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let idx: Vec<usize> = match mode {
        ResampleMode::DownsampleMajority => {
            let mut pool = majority;
            pool.shuffle(&mut rng);
            pool.truncate(minority.len());
            let mut keep = [minority, pool].concat();
            keep.sort_unstable();
            keep
        }
        ResampleMode::UpsampleMinorityFull => {
            let deficit = majority.len() - minority.len();
            let mut idx: Vec<usize> = (0..train.n()).collect();
            for _ in 0..deficit {
                idx.push(minority[rng.random_range(0..minority.len())]);
            }
            idx
        }
        ResampleMode::UpsampleMinorityOneExtraCopy => {
            let mut idx: Vec<usize> = (0..train.n()).collect();
            idx.extend_from_slice(&minority);
            idx
        }
    };
    Ok(train.select_rows(&idx))
}
