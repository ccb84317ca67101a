//! Dimension estimates per dataset, their correlations and the slopes of
//! each estimate regressed on the number of attributes.

use std::path::Path;

use lpdim_core::dataset::{load_csv, preprocess};
use lpdim_core::dimension::{estimate_all, pearson_correlation_matrix, slope_through_origin};
use lpdim_core::{DatasetManifest, DimensionConfig, DimensionReport, PreprocessMode};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{csv_bytes, json_bytes, sibling, write_atomic};
use crate::Failures;

/// Columns of the correlation matrix, in order.
pub const ANALYSIS_COLUMNS: [&str; 6] = ["n_attr", "pca_k", "pca_bs", "pca_cn", "sep_d", "frac_d"];

#[derive(Debug, Serialize)]
struct DimsRow {
    name: String,
    n_attr: usize,
    cases: usize,
    pca_k: usize,
    pca_bs: usize,
    pca_cn: usize,
    sep_d: f64,
    frac_d: f64,
}

#[derive(Debug, Serialize)]
struct Slope {
    estimator: &'static str,
    slope: f64,
}

#[derive(Debug, Serialize)]
struct ItemError {
    dataset: String,
    error: String,
}

#[derive(Debug, Serialize)]
struct Analysis {
    preprocessing: PreprocessMode,
    /// Whether the covariance used by the PCA rules is mean-centred.
    centered: bool,
    condition_number: f64,
    separability_alpha: f64,
    datasets: usize,
    columns: [&'static str; 6],
    /// `null` when fewer than two datasets or a constant column.
    correlation: Option<Vec<Vec<f64>>>,
    correlation_error: Option<String>,
    /// Least-squares slope of each estimate on `n_attr`, without intercept.
    slopes_on_n_attr: Vec<Slope>,
    sep_saturated: Vec<String>,
    failures: Vec<ItemError>,
}

fn analysis_columns(reports: &[DimensionReport]) -> Vec<Vec<f64>> {
    let col = |f: fn(&DimensionReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
    vec![
        col(|r| r.n_attr as f64),
        col(|r| r.pca_k as f64),
        col(|r| r.pca_bs as f64),
        col(|r| r.pca_cn as f64),
        col(|r| r.sep_d),
        col(|r| r.frac_d),
    ]
}

pub fn run(manifest: &Path, out: &Path, mode: PreprocessMode) -> Result<Failures, CliError> {
    let cfg = DimensionConfig::default();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut saturated = Vec::new();

    for m in DatasetManifest::load_all(manifest)? {
        let result = load_csv(&m).and_then(|ds| {
            let ds = preprocess(&ds, mode);
            estimate_all(&ds, &cfg).map(|r| (ds.data.rows(), r))
        });
        match result {
            Ok((cases, r)) => {
                if r.sep_saturated {
                    saturated.push(m.name.clone());
                }
                rows.push(DimsRow {
                    name: m.name.clone(),
                    n_attr: r.n_attr,
                    cases,
                    pca_k: r.pca_k,
                    pca_bs: r.pca_bs,
                    pca_cn: r.pca_cn,
                    sep_d: r.sep_d,
                    frac_d: r.frac_d,
                });
                reports.push(r);
            }
            Err(e) => {
                eprintln!("lpdim dims: {}: {e}", m.name);
                failures.push(ItemError {
                    dataset: m.name.clone(),
                    error: e.to_string(),
                });
            }
        }
    }

    let columns = analysis_columns(&reports);
    let (correlation, correlation_error) = match pearson_correlation_matrix(&columns) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let slopes_on_n_attr = if reports.is_empty() {
        Vec::new()
    } else {
        ANALYSIS_COLUMNS[1..]
            .iter()
            .zip(&columns[1..])
            .map(|(&estimator, ys)| {
                Ok(Slope {
                    estimator,
                    slope: slope_through_origin(&columns[0], ys)?,
                })
            })
            .collect::<Result<_, lpdim_core::Error>>()?
    };

    let failed = failures.len();
    let analysis = Analysis {
        preprocessing: mode,
        centered: true,
        condition_number: cfg.condition_number,
        separability_alpha: cfg.alpha,
        datasets: reports.len(),
        columns: ANALYSIS_COLUMNS,
        correlation,
        correlation_error,
        slopes_on_n_attr,
        sep_saturated: saturated,
        failures,
    };
    write_atomic(out, &csv_bytes(&rows)?)?;
    write_atomic(&sibling(out, "analysis.json"), &json_bytes(&analysis)?)?;
    Ok(failed)
}
