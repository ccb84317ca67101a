//! Leave-one-out k-nearest-neighbour evaluation under any lp dissimilarity.
//!
//! Neighbour search is a linear scan per query. For `p < 1` the
//! dissimilarity violates the triangle inequality, which rules out metric
//! indexes.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{preprocess, DataMatrix, Label, LabeledDataset, PreprocessMode};
use crate::error::{invalid, Result};
use crate::metrics::{distances_from, LpExponent};

/// Default neighbourhood size.
pub const DEFAULT_K: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnConfig {
    pub k: usize,
    pub p: LpExponent,
}

impl KnnConfig {
    pub fn new(k: usize, p: LpExponent) -> Self {
        Self { k, p }
    }
}

/// Quality of one (dataset, preprocessing, p) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRecord {
    pub dataset: String,
    pub preprocessing: PreprocessMode,
    pub p: LpExponent,
    /// Total number of same-class points among every point's k neighbours.
    pub tnnsc: u64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub n: usize,
    pub n_pos: usize,
}

impl QualityRecord {
    /// Number of correctly classified points.
    pub fn correct(&self) -> usize {
        (self.accuracy * self.n as f64).round() as usize
    }
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn nearest(dist: Vec<f64>, skip: usize, k: usize) -> Vec<usize> {
    let mut cand: Vec<(f64, usize)> = dist
        .into_iter()
        .enumerate()
        .filter(|&(j, _)| j != skip)
        .map(|(j, d)| (d, j))
        .collect();
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, by_distance_then_index);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_distance_then_index);
    cand.into_iter().map(|(_, j)| j).collect()
}

/// The `k` rows nearest to row `query` (itself excluded), nearest first.
/// Equal distances are ordered by row index; exact duplicates of the query
/// are included at distance zero.
pub fn knn_indices(x: &DataMatrix, query: usize, k: usize, p: LpExponent) -> Result<Vec<usize>> {
    if query >= x.rows() {
        return Err(invalid(format!("query row {query} out of range")));
    }
    if k == 0 || k >= x.rows() {
        return Err(invalid(format!(
            "k = {k} must lie in 1..={} for {} rows",
            x.rows().saturating_sub(1),
            x.rows()
        )));
    }
    Ok(nearest(distances_from(x, x.row(query), p)?, query, k))
}

/// Majority vote; an even split goes to the nearest neighbour's class.
fn vote(neighbours: &[usize], labels: &[Label]) -> Label {
    let pos = neighbours
        .iter()
        .filter(|&&j| labels[j] == Label::Positive)
        .count();
    match (2 * pos).cmp(&neighbours.len()) {
        Ordering::Greater => Label::Positive,
        Ordering::Less => Label::Negative,
        Ordering::Equal => labels[neighbours[0]],
    }
}

/// Leave-one-out TNNSC, accuracy, sensitivity and specificity. The
/// `preprocessing` field of the result is [`PreprocessMode::Empty`]; the
/// data are used as given.
pub fn loo_evaluate(ds: &LabeledDataset, cfg: &KnnConfig) -> Result<QualityRecord> {
    ds.require_both_classes()?;
    let n = ds.data.rows();
    if cfg.k == 0 || n <= cfg.k {
        return Err(invalid(format!(
            "'{}': need n > k >= 1 (n = {n}, k = {})",
            ds.name, cfg.k
        )));
    }
    let per_point: Vec<(u64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<(u64, bool)> {
            let nb = nearest(distances_from(&ds.data, ds.data.row(i), cfg.p)?, i, cfg.k);
            let same = nb.iter().filter(|&&j| ds.labels[j] == ds.labels[i]).count() as u64;
            Ok((same, vote(&nb, &ds.labels) == ds.labels[i]))
        })
        .collect::<Result<_>>()?;

    let n_pos = ds.n_positive();
    let mut tnnsc = 0;
    let (mut correct, mut correct_pos, mut correct_neg) = (0usize, 0usize, 0usize);
    for (i, &(same, ok)) in per_point.iter().enumerate() {
        tnnsc += same;
        if ok {
            correct += 1;
            match ds.labels[i] {
                Label::Positive => correct_pos += 1,
                Label::Negative => correct_neg += 1,
            }
        }
    }
    Ok(QualityRecord {
        dataset: ds.name.clone(),
        preprocessing: PreprocessMode::Empty,
        p: cfg.p,
        tnnsc,
        accuracy: correct as f64 / n as f64,
        sensitivity: correct_pos as f64 / n_pos as f64,
        specificity: correct_neg as f64 / (n - n_pos) as f64,
        n,
        n_pos,
    })
}

/// One record per (mode, p), modes outermost, in the order given.
pub fn evaluate_grid(
    ds: &LabeledDataset,
    ps: &[LpExponent],
    modes: &[PreprocessMode],
    k: usize,
) -> Result<Vec<QualityRecord>> {
    let mut out = Vec::with_capacity(ps.len() * modes.len());
    for &mode in modes {
        let prepared = preprocess(ds, mode);
        for &p in ps {
            let mut rec = loo_evaluate(&prepared, &KnnConfig::new(k, p))?;
            rec.preprocessing = mode;
            out.push(rec);
        }
    }
    Ok(out)
}
