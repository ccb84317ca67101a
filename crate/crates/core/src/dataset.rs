//! Datasets: dense matrices, binary labels, CSV/manifest loading,
//! column preprocessing and synthetic generators.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Dense row-major matrix of finite reals, at least 1×1.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row_iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.cols)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.row_iter().map(|r| r[j]).collect()
    }

    /// Applies `f` to every column in place. `f` receives the column values
    /// and must leave them finite.
    fn map_columns(&self, mut f: impl FnMut(&mut [f64])) -> Self {
        let mut out = self.values.clone();
        let mut col = vec![0.0; self.rows];
        for j in 0..self.cols {
            for (i, c) in col.iter_mut().enumerate() {
                *c = self.values[i * self.cols + j];
            }
            f(&mut col);
            for (i, c) in col.iter().enumerate() {
                out[i * self.cols + j] = *c;
            }
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            values: out,
        }
    }

    /// Returns true if two rows are bitwise equal somewhere in the matrix.
    pub fn has_duplicate_rows(&self) -> bool {
        let mut seen = std::collections::HashSet::with_capacity(self.rows);
        self.row_iter()
            .any(|r| !seen.insert(r.iter().map(|v| v.to_bits()).collect::<Vec<_>>()))
    }
}

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

/// Feature matrix with one binary label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    pub data: DataMatrix,
    pub labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, data: DataMatrix, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != data.rows() {
            return Err(Error::DimensionMismatch {
                expected: data.rows(),
                actual: labels.len(),
            });
        }
        Ok(Self {
            name: name.into(),
            data,
            labels,
        })
    }

    pub fn n_positive(&self) -> usize {
        self.labels
            .iter()
            .filter(|&&l| l == Label::Positive)
            .count()
    }

    /// Fails unless both classes have at least one row.
    pub fn require_both_classes(&self) -> Result<()> {
        let pos = self.n_positive();
        if pos == 0 || pos == self.labels.len() {
            return Err(Error::Degenerate(format!(
                "dataset '{}' has a single class ({} positive of {})",
                self.name,
                pos,
                self.labels.len()
            )));
        }
        Ok(())
    }
}

/// Per-column preprocessing applied before distances are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreprocessMode {
    Empty,
    Standardise,
    Minmax,
}

impl PreprocessMode {
    pub const ALL: [PreprocessMode; 3] = [Self::Empty, Self::Standardise, Self::Minmax];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Empty => "empty",
            Self::Standardise => "standardise",
            Self::Minmax => "minmax",
        }
    }

    /// One-letter tag used in report headings.
    pub fn short(self) -> &'static str {
        match self {
            Self::Empty => "E",
            Self::Standardise => "S",
            Self::Minmax => "M",
        }
    }
}

impl fmt::Display for PreprocessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PreprocessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "empty" | "none" | "e" => Ok(Self::Empty),
            "standardise" | "standardize" | "std" | "s" => Ok(Self::Standardise),
            "minmax" | "min-max" | "m" => Ok(Self::Minmax),
            other => Err(invalid(format!("unknown preprocessing mode '{other}'"))),
        }
    }
}

/// Applies a preprocessing mode column by column. Constant columns become
/// all-zero under both `Standardise` and `Minmax`. Variance is the
/// population variance.
pub fn preprocess(ds: &LabeledDataset, mode: PreprocessMode) -> LabeledDataset {
    LabeledDataset {
        name: ds.name.clone(),
        data: preprocess_matrix(&ds.data, mode),
        labels: ds.labels.clone(),
    }
}

pub fn preprocess_matrix(x: &DataMatrix, mode: PreprocessMode) -> DataMatrix {
    match mode {
        PreprocessMode::Empty => x.clone(),
        PreprocessMode::Standardise => x.map_columns(standardise_column),
        PreprocessMode::Minmax => x.map_columns(minmax_column),
    }
}

fn is_constant(col: &[f64]) -> bool {
    col.iter().all(|&v| v == col[0])
}

fn standardise_column(col: &mut [f64]) {
    if is_constant(col) {
        col.fill(0.0);
        return;
    }
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    for v in col.iter_mut() {
        *v = (*v - mean) / sd;
    }
}

fn minmax_column(col: &mut [f64]) {
    if is_constant(col) {
        col.fill(0.0);
        return;
    }
    let (lo, hi) = col
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    for v in col.iter_mut() {
        *v = (*v - lo) / range;
    }
}

/// `n` points with i.i.d. uniform coordinates in `[0, 1)`.
///
/// Coordinates are drawn point by point from a ChaCha8 stream seeded with
/// `seed`, so the first `d'` columns of an `n × d` sample form the nested
/// lower-dimensional sample.
pub fn gen_uniform_cube(n: usize, d: usize, seed: u64) -> Result<DataMatrix> {
    if n == 0 || d == 0 {
        return Err(invalid(format!(
            "gen_uniform_cube needs n, d >= 1 (got {n}, {d})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * d).map(|_| rng.random::<f64>()).collect();
    DataMatrix::new(n, d, values)
}

/// First `d_prime` columns of `x`.
pub fn prefix_dims(x: &DataMatrix, d_prime: usize) -> Result<DataMatrix> {
    if d_prime == 0 || d_prime > x.cols() {
        return Err(invalid(format!(
            "prefix dimension {d_prime} outside 1..={}",
            x.cols()
        )));
    }
    let values = x
        .row_iter()
        .flat_map(|r| r[..d_prime].iter().copied())
        .collect();
    DataMatrix::new(x.rows(), d_prime, values)
}

/// Repeats the whole attribute block `t` times (t = total number of copies).
pub fn duplicate_attributes(x: &DataMatrix, t: usize) -> Result<DataMatrix> {
    if t == 0 {
        return Err(invalid("duplicate_attributes needs t >= 1"));
    }
    let mut values = Vec::with_capacity(x.values().len() * t);
    for r in x.row_iter() {
        for _ in 0..t {
            values.extend_from_slice(r);
        }
    }
    DataMatrix::new(x.rows(), x.cols() * t, values)
}

// ---------------------------------------------------------------------------
// Manifest + CSV
// ---------------------------------------------------------------------------

/// Label column given either by header name or by zero-based index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Index(i) => write!(f, "#{i}"),
            LabelColumn::Name(n) => f.write_str(n),
        }
    }
}

/// Describes how to turn one CSV file into a binary [`LabeledDataset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub csv_path: String,
    pub label_column: LabelColumn,
    pub positive_labels: BTreeSet<String>,
    #[serde(default)]
    pub drop_columns: BTreeSet<String>,
}

impl DatasetManifest {
    /// Reads a manifest file. The file may hold a single JSON object, a JSON
    /// array of objects, or a sequence of objects (one per line). Relative
    /// `csv_path`s are resolved against the manifest's directory.
    pub fn load_all(path: &Path) -> Result<Vec<DatasetManifest>> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut out: Vec<DatasetManifest> = Vec::new();
        for value in serde_json::Deserializer::from_str(&text).into_iter::<serde_json::Value>() {
            match value? {
                serde_json::Value::Array(items) => {
                    for item in items {
                        out.push(serde_json::from_value(item)?);
                    }
                }
                obj @ serde_json::Value::Object(_) => out.push(serde_json::from_value(obj)?),
                other => {
                    return Err(Error::Manifest(format!(
                        "expected an object or array, found {other}"
                    )))
                }
            }
        }
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        for m in &mut out {
            let p = PathBuf::from(&m.csv_path);
            if p.is_relative() {
                m.csv_path = base.join(p).to_string_lossy().into_owned();
            }
        }
        Ok(out)
    }
}

/// Loads the CSV named by a manifest.
///
/// Rows whose label is in `positive_labels` become [`Label::Positive`], all
/// others [`Label::Negative`]. Every declared positive label must be observed
/// and both classes must be non-empty.
pub fn load_csv(manifest: &DatasetManifest) -> Result<LabeledDataset> {
    let path = PathBuf::from(&manifest.csv_path);
    if manifest.positive_labels.is_empty() {
        return Err(Error::Manifest(format!(
            "'{}': positive_labels is empty",
            manifest.name
        )));
    }
    let file = std::fs::File::open(&path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.clone(),
        message: e.to_string(),
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();

    let label_idx = match &manifest.label_column {
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Name(n) => header.iter().position(|h| h == n).ok_or_else(|| {
            Error::Manifest(format!(
                "label column '{n}' not in header of {}",
                path.display()
            ))
        })?,
        LabelColumn::Index(i) => {
            return Err(Error::Manifest(format!(
                "label column index {i} out of range ({} columns)",
                header.len()
            )))
        }
    };
    for dropped in &manifest.drop_columns {
        if !header.contains(dropped) {
            return Err(Error::Manifest(format!(
                "drop column '{dropped}' not in header of {}",
                path.display()
            )));
        }
    }
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|&j| j != label_idx && !manifest.drop_columns.contains(&header[j]))
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::Manifest(format!(
            "'{}' has no feature columns",
            manifest.name
        )));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut seen_positive = BTreeSet::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        // 1-based data row numbering, header excluded
        let row = r + 1;
        if record.len() != header.len() {
            return Err(Error::Csv {
                path: path.clone(),
                message: format!(
                    "row {row} has {} fields, header has {}",
                    record.len(),
                    header.len()
                ),
            });
        }
        for &j in &feature_idx {
            let cell = &record[j];
            let cell_err = |message: &str| Error::Cell {
                path: path.clone(),
                row,
                column: header[j].clone(),
                message: message.to_owned(),
            };
            if cell.is_empty() {
                return Err(cell_err("empty cell"));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| cell_err(&format!("cannot parse '{cell}' as a number")))?;
            if !v.is_finite() {
                return Err(cell_err("non-finite value"));
            }
            values.push(v);
        }
        let raw = &record[label_idx];
        if raw.is_empty() {
            return Err(Error::Cell {
                path: path.clone(),
                row,
                column: header[label_idx].clone(),
                message: "empty label".into(),
            });
        }
        if manifest.positive_labels.contains(raw) {
            seen_positive.insert(raw.to_owned());
            labels.push(Label::Positive);
        } else {
            labels.push(Label::Negative);
        }
    }
    if labels.is_empty() {
        return Err(Error::Csv {
            path,
            message: "no data rows".into(),
        });
    }
    if let Some(missing) = manifest.positive_labels.difference(&seen_positive).next() {
        return Err(Error::Manifest(format!(
            "'{}': positive label '{missing}' never occurs in column {}",
            manifest.name, manifest.label_column
        )));
    }
    let data = DataMatrix::new(labels.len(), feature_idx.len(), values)?;
    let ds = LabeledDataset::new(manifest.name.clone(), data, labels)?;
    ds.require_both_classes()?;
    Ok(ds)
}
