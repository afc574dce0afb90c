//! CSV ingestion, min-max normalization and stratified train/test splits.
//!
//! A [`Dataset`] holds a numeric feature table scaled to the unit
//! interval together with binary labels encoded as -1/+1. Two loading
//! paths are provided:
//!
//! * [`load_csv`] normalizes each column over the whole file — the right
//!   choice when the data will not be split afterwards.
//! * [`load_csv_split`] first partitions the rows and then fits the
//!   min/max statistics on the training part only, clamping the test
//!   part into `[0, 1]`. This is what the pipeline uses so that no test
//!   information leaks into the scaling.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Errors raised while reading, validating or splitting a dataset.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv parse failure in {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("label column {0:?} not found in header")]
    MissingLabelColumn(String),
    #[error("row {row}, column {column:?}: {value:?} is not numeric")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("dataset has no rows")]
    Empty,
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("expected exactly 2 label values, found {0:?}")]
    LabelCardinality(Vec<String>),
    #[error("train fraction {fraction} leaves an empty {side} split for {n} rows")]
    DegenerateSplit {
        fraction: f64,
        n: usize,
        side: &'static str,
    },
    #[error("train fraction must be in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("normalized file {path} row {row}: {what}")]
    NotNormalized {
        path: String,
        row: usize,
        what: String,
    },
}

/// A numeric feature table in `[0, 1]` with -1/+1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    /// Row-major: `features[i][j]` is feature `j` of sample `i`.
    features: Vec<Vec<f64>>,
    /// Each entry is -1 or +1.
    labels: Vec<i8>,
    /// Raw label strings mapped to (-1, +1), kept for reporting.
    label_names: (String, String),
}

impl Dataset {
    /// Assembles a dataset from already-normalized parts, validating shape.
    pub fn new(
        feature_names: Vec<String>,
        features: Vec<Vec<f64>>,
        labels: Vec<i8>,
        label_names: (String, String),
    ) -> Result<Self, DatasetError> {
        if features.is_empty() {
            return Err(DatasetError::Empty);
        }
        if feature_names.is_empty() {
            return Err(DatasetError::NoFeatures);
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(DatasetError::RaggedRow {
                    row: i,
                    found: row.len(),
                    expected: feature_names.len(),
                });
            }
        }
        assert_eq!(features.len(), labels.len(), "one label per row");
        debug_assert!(labels.iter().all(|&y| y == -1 || y == 1));
        Ok(Self {
            feature_names,
            features,
            labels,
            label_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    /// Raw label strings mapped to (-1, +1).
    pub fn label_names(&self) -> (&str, &str) {
        (&self.label_names.0, &self.label_names.1)
    }

    /// Counts of (-1, +1) labels.
    pub fn class_counts(&self) -> (usize, usize) {
        let neg = self.labels.iter().filter(|&&y| y == -1).count();
        (neg, self.labels.len() - neg)
    }

    /// Returns the subset of rows given by `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            label_names: self.label_names.clone(),
        }
    }

    /// Serializes to CSV with a trailing `label` column holding -1/1.
    ///
    /// The written table is already normalized; read it back with
    /// [`read_normalized_csv`] (re-running [`load_csv`] on it would refit
    /// the scaling on whatever subset it holds).
    pub fn write_csv(&self, path: &Path) -> Result<(), DatasetError> {
        let mut out = String::new();
        for name in &self.feature_names {
            let _ = write!(out, "{},", name);
        }
        out.push_str("label\n");
        for (row, y) in self.features.iter().zip(&self.labels) {
            for v in row {
                let _ = write!(out, "{},", v);
            }
            let _ = writeln!(out, "{}", y);
        }
        std::fs::write(path, out).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// How to partition a dataset into train and test parts.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    /// Fraction of rows assigned to the training split, in (0, 1).
    pub train_fraction: f64,
    /// Seed for the deterministic shuffle.
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

// ---------------------------------------------------------------------------
// raw parsing
// ---------------------------------------------------------------------------

/// A parsed but not yet normalized CSV table.
struct RawTable {
    feature_names: Vec<String>,
    features: Vec<Vec<f64>>,
    labels: Vec<i8>,
    label_names: (String, String),
}

fn parse_raw(path: &Path, label_column: &str) -> Result<RawTable, DatasetError> {
    let path_str = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path_str.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers: Vec<String> = reader
        .headers()
        .map_err(|source| DatasetError::Csv {
            path: path_str.clone(),
            source,
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| DatasetError::MissingLabelColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(DatasetError::NoFeatures);
    }

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(|source| DatasetError::Csv {
            path: path_str.clone(),
            source,
        })?;
        if record.len() != headers.len() {
            return Err(DatasetError::RaggedRow {
                row: row_no,
                found: record.len(),
                expected: headers.len(),
            });
        }
        let mut row = Vec::with_capacity(feature_names.len());
        for (col, value) in record.iter().enumerate() {
            if col == label_idx {
                raw_labels.push(value.to_string());
            } else {
                let parsed: f64 = value.parse().map_err(|_| DatasetError::NonNumericCell {
                    row: row_no,
                    column: headers[col].clone(),
                    value: value.to_string(),
                })?;
                if !parsed.is_finite() {
                    return Err(DatasetError::NonNumericCell {
                        row: row_no,
                        column: headers[col].clone(),
                        value: value.to_string(),
                    });
                }
                row.push(parsed);
            }
        }
        features.push(row);
    }
    if features.is_empty() {
        return Err(DatasetError::Empty);
    }

    // Exactly two distinct raw labels; the lexicographically smaller one
    // becomes -1 so the encoding is stable across runs and platforms.
    let distinct: BTreeSet<&String> = raw_labels.iter().collect();
    if distinct.len() != 2 {
        return Err(DatasetError::LabelCardinality(
            distinct.into_iter().cloned().collect(),
        ));
    }
    let mut it = distinct.into_iter();
    let neg_name = it.next().unwrap().clone();
    let pos_name = it.next().unwrap().clone();
    let labels = raw_labels
        .iter()
        .map(|s| if *s == neg_name { -1 } else { 1 })
        .collect();

    Ok(RawTable {
        feature_names,
        features,
        labels,
        label_names: (neg_name, pos_name),
    })
}

// ---------------------------------------------------------------------------
// normalization
// ---------------------------------------------------------------------------

/// Per-column (min, max) pairs.
type ColumnStats = Vec<(f64, f64)>;

fn column_stats(rows: &[Vec<f64>]) -> ColumnStats {
    let n_cols = rows[0].len();
    let mut stats = vec![(f64::INFINITY, f64::NEG_INFINITY); n_cols];
    for row in rows {
        for (j, &v) in row.iter().enumerate() {
            stats[j].0 = stats[j].0.min(v);
            stats[j].1 = stats[j].1.max(v);
        }
    }
    stats
}

/// Applies `(v - min) / (max - min)` per column; constant columns map to 0.
/// With `clamp` the result is clipped into `[0, 1]` (used for test rows
/// scaled with training statistics).
fn apply_stats(rows: &mut [Vec<f64>], stats: &ColumnStats, clamp: bool) {
    for row in rows.iter_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            let (lo, hi) = stats[j];
            let range = hi - lo;
            *v = if range > 0.0 { (*v - lo) / range } else { 0.0 };
            if clamp {
                *v = v.clamp(0.0, 1.0);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// public loading / splitting API
// ---------------------------------------------------------------------------

/// Loads a CSV file with a header row, normalizing every feature column
/// to `[0, 1]` by min-max over the whole file. The `label_column` must
/// hold exactly two distinct values; the lexicographically smaller one
/// maps to -1, the other to +1. Constant feature columns map to 0.
pub fn load_csv(path: &Path, label_column: &str) -> Result<Dataset, DatasetError> {
    let mut raw = parse_raw(path, label_column)?;
    let stats = column_stats(&raw.features);
    apply_stats(&mut raw.features, &stats, false);
    Dataset::new(raw.feature_names, raw.features, raw.labels, raw.label_names)
}

/// Reads back a table written by [`Dataset::write_csv`]: features must
/// already lie in `[0, 1]` and the `label` column must hold -1/1. No
/// rescaling is applied, so splits normalized with training statistics
/// survive a round-trip unchanged.
pub fn read_normalized_csv(path: &Path) -> Result<Dataset, DatasetError> {
    let raw = parse_raw(path, "label")?;
    let path_str = path.display().to_string();
    for (i, row) in raw.features.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(-1e-9..=1.0 + 1e-9).contains(&v) {
                return Err(DatasetError::NotNormalized {
                    path: path_str,
                    row: i,
                    what: format!("feature {:?} = {} outside [0, 1]", raw.feature_names[j], v),
                });
            }
        }
    }
    let (neg, pos) = (&raw.label_names.0, &raw.label_names.1);
    if (neg.as_str(), pos.as_str()) != ("-1", "1") {
        return Err(DatasetError::NotNormalized {
            path: path.display().to_string(),
            row: 0,
            what: format!("labels {:?}/{:?}, expected -1/1", neg, pos),
        });
    }
    Dataset::new(raw.feature_names, raw.features, raw.labels, raw.label_names)
}

/// Deterministic stratified partition of `labels` into train/test index
/// sets. The train side receives `round(train_fraction * n)` rows overall
/// and both classes are represented in it whenever both occur.
fn stratified_indices(
    labels: &[i8],
    spec: &SplitSpec,
) -> Result<(Vec<usize>, Vec<usize>), DatasetError> {
    let n = labels.len();
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DatasetError::BadFraction(spec.train_fraction));
    }
    let n_train = (spec.train_fraction * n as f64).round() as usize;
    if n_train == 0 {
        return Err(DatasetError::DegenerateSplit {
            fraction: spec.train_fraction,
            n,
            side: "train",
        });
    }
    if n_train >= n {
        return Err(DatasetError::DegenerateSplit {
            fraction: spec.train_fraction,
            n,
            side: "test",
        });
    }

    let mut neg: Vec<usize> = (0..n).filter(|&i| labels[i] == -1).collect();
    let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
    // Independent per-class streams keep the shuffle of one class stable
    // under changes to the other.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    neg.shuffle(&mut rng);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(2);
    pos.shuffle(&mut rng);

    // Proportional share for the negative class, remainder to the
    // positive one, then adjusted so totals are exact and any class
    // present in the input keeps at least one training row.
    let mut k_neg = (spec.train_fraction * neg.len() as f64).round() as usize;
    k_neg = k_neg.min(n_train).min(neg.len());
    let mut k_pos = n_train - k_neg;
    if k_pos > pos.len() {
        k_neg += k_pos - pos.len();
        k_pos = pos.len();
    }
    if !neg.is_empty() && k_neg == 0 {
        k_neg = 1;
        k_pos -= 1;
    }
    if !pos.is_empty() && k_pos == 0 && k_neg > 1 {
        k_pos = 1;
        k_neg -= 1;
    }

    let mut train: Vec<usize> = neg[..k_neg].iter().chain(pos[..k_pos].iter()).copied().collect();
    let mut test: Vec<usize> = neg[k_neg..].iter().chain(pos[k_pos..].iter()).copied().collect();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified deterministic partition of an already-loaded dataset.
/// The two parts are row subsets of the input (no renormalization).
pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), DatasetError> {
    let (train_idx, test_idx) = stratified_indices(&data.labels, spec)?;
    Ok((data.subset(&train_idx), data.subset(&test_idx)))
}

/// Loads a raw CSV, splits it, and normalizes with statistics fitted on
/// the training rows only; test rows are scaled with the same statistics
/// and clamped into `[0, 1]`.
pub fn load_csv_split(
    path: &Path,
    label_column: &str,
    spec: &SplitSpec,
) -> Result<(Dataset, Dataset), DatasetError> {
    let raw = parse_raw(path, label_column)?;
    let (train_idx, test_idx) = stratified_indices(&raw.labels, spec)?;

    let take = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<i8>) {
        (
            idx.iter().map(|&i| raw.features[i].clone()).collect(),
            idx.iter().map(|&i| raw.labels[i]).collect(),
        )
    };
    let (mut train_rows, train_labels) = take(&train_idx);
    let (mut test_rows, test_labels) = take(&test_idx);

    let stats = column_stats(&train_rows);
    apply_stats(&mut train_rows, &stats, false);
    apply_stats(&mut test_rows, &stats, true);

    let train = Dataset::new(
        raw.feature_names.clone(),
        train_rows,
        train_labels,
        raw.label_names.clone(),
    )?;
    let test = Dataset::new(raw.feature_names, test_rows, test_labels, raw.label_names)?;
    Ok((train, test))
}
