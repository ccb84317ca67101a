//! Uniform-cube experiments: sample generation, the concentration sweep and
//! the l1/l2 relative contrast comparison.

use std::path::Path;

use lpdim_core::concentration::{concentration_sweep, rc_comparison_experiment};
use lpdim_core::dataset::gen_uniform_cube;
use lpdim_core::{LpExponent, RcComparisonRow};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{csv_bytes, emit};
use crate::Scale;

pub const TABLE1_DIMS: [usize; 8] = [1, 2, 3, 4, 10, 15, 20, 100];
pub const TABLE1_POINTS: [usize; 3] = [10, 20, 100];

/// `1, 2, 3, 4, 5, 10, 15, ..., 200`.
pub fn sweep_dims() -> Vec<usize> {
    (1..=4).chain((5..=200).step_by(5)).collect()
}

pub fn concentration_defaults(scale: Scale) -> (usize, Vec<usize>) {
    match scale {
        Scale::Desk => (1000, sweep_dims()),
        Scale::Paper => (10_000, sweep_dims()),
    }
}

pub fn gen(seed: u64, n: usize, dim: usize, out: Option<&Path>) -> Result<(), CliError> {
    let x = gen_uniform_cube(n, dim, seed)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((1..=dim).map(|j| format!("x{j}")))?;
    for row in x.row_iter() {
        w.write_record(row.iter().map(f64::to_string))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io {
        path: "<csv buffer>".into(),
        source: e.into_error(),
    })?;
    emit(out, &bytes)
}

#[derive(Serialize)]
struct SweepRow {
    dim: usize,
    p: String,
    rc: f64,
    cv: f64,
}

pub fn concentration(
    n: usize,
    dims: &[usize],
    ps: &[LpExponent],
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(CliError::Usage(
            "--dims must list positive dimensions".into(),
        ));
    }
    let rows: Vec<SweepRow> = concentration_sweep(n, dims, ps, seed)?
        .into_iter()
        .map(|r| SweepRow {
            dim: r.dimension,
            p: r.p.to_string(),
            rc: r.rc,
            cv: r.cv,
        })
        .collect();
    emit(out, &csv_bytes(&rows)?)
}

/// Rows ordered by dimension, then by number of points.
pub fn table1(
    dims: &[usize],
    points: &[usize],
    reps: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if dims.is_empty() || points.is_empty() {
        return Err(CliError::Usage(
            "--dims and --k-points must be non-empty".into(),
        ));
    }
    let per_k: Vec<Vec<RcComparisonRow>> = points
        .iter()
        .map(|&k| rc_comparison_experiment(k, dims, reps, seed))
        .collect::<Result<_, _>>()?;
    let rows: Vec<RcComparisonRow> = (0..dims.len())
        .flat_map(|di| per_k.iter().map(move |rows| rows[di]))
        .collect();
    emit(out, &csv_bytes(&rows)?)
}
