//! Distance concentration: relative contrast (RC), coefficient of variation
//! (CV), and the two uniform-cube experiments built on them.

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{gen_uniform_cube, DataMatrix};
use crate::error::{invalid, Error, Result};
use crate::metrics::{distances_from, pairwise_prefix_summaries, LpExponent, PairScale};

/// Streaming statistics of a multiset of distances. `variance` is the
/// population variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub variance: f64,
    pub count: u64,
}

impl DistanceSummary {
    pub(crate) fn from_parts(count: u64, mean: f64, m2: f64, min: f64, max: f64) -> Self {
        // guard the min <= mean <= max invariant against round-off
        let mean = mean.clamp(min, max);
        let variance = if min == max { 0.0 } else { m2 / count as f64 };
        Self {
            min,
            max,
            mean,
            variance,
            count,
        }
    }

    /// Summary of an explicit list of values (Welford). `None` when empty.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let (&first, _) = values.split_first()?;
        let (mut mean, mut m2) = (0.0, 0.0);
        let (mut min, mut max) = (first, first);
        for (i, &v) in values.iter().enumerate() {
            let delta = v - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (v - mean);
            min = min.min(v);
            max = max.max(v);
        }
        Some(Self::from_parts(values.len() as u64, mean, m2, min, max))
    }

    /// Combines two disjoint summaries (Chan et al. pairwise update).
    pub fn merge(&self, other: &Self) -> Self {
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * nb / n;
        let m2 = self.variance * na + other.variance * nb + delta * delta * na * nb / n;
        Self::from_parts(
            self.count + other.count,
            mean,
            m2,
            self.min.min(other.min),
            self.max.max(other.max),
        )
    }
}

/// `(max - min) / min`.
pub fn rc_from_summary(s: &DistanceSummary) -> Result<f64> {
    if s.min <= 0.0 {
        return Err(Error::Degenerate(
            "minimal distance is zero (duplicate points); relative contrast undefined".into(),
        ));
    }
    Ok((s.max - s.min) / s.min)
}

/// `sqrt(variance) / mean`.
pub fn cv_from_summary(s: &DistanceSummary) -> Result<f64> {
    if s.mean <= 0.0 {
        return Err(Error::Degenerate(
            "mean distance is zero; coefficient of variation undefined".into(),
        ));
    }
    Ok(s.variance.sqrt() / s.mean)
}

fn rc_of(distances: impl Iterator<Item = f64>) -> Result<f64> {
    let (min, max) = distances.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
        (lo.min(d), hi.max(d))
    });
    if min <= 0.0 {
        return Err(Error::Degenerate(
            "query point coincides with a data point; relative contrast undefined".into(),
        ));
    }
    Ok((max - min) / min)
}

/// Relative contrast of the distances from `y` to every row of `x`.
pub fn point_rc(x: &DataMatrix, y: &[f64], p: LpExponent) -> Result<f64> {
    if x.rows() < 2 {
        return Err(invalid("point RC needs at least 2 data points"));
    }
    rc_of(distances_from(x, y, p)?.into_iter())
}

/// Mean over all rows of the RC of that row against the remaining rows.
pub fn mean_point_rc(x: &DataMatrix, p: LpExponent) -> Result<f64> {
    let n = x.rows();
    if n < 3 {
        return Err(invalid("mean point RC needs at least 3 points"));
    }
    let mut total = 0.0;
    for i in 0..n {
        let d = distances_from(x, x.row(i), p)?;
        let others = d
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v);
        total += rc_of(others).map_err(|_| {
            Error::Degenerate(format!(
                "row {i} is duplicated; relative contrast undefined"
            ))
        })?;
    }
    Ok(total / n as f64)
}

/// One row of the l1-versus-l2 relative contrast comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RcComparisonRow {
    pub dim: usize,
    pub k_points: usize,
    pub reps: usize,
    pub fraction: f64,
}

/// Number of coordinates generated per repetition of the RC comparison.
pub const RC_COMPARISON_COORDS: usize = 100;

/// Fraction of repetitions in which the mean point RC under l1 strictly
/// exceeds that under l2, for each dimension in `dims`.
///
/// Repetition `r` draws `k` points with [`RC_COMPARISON_COORDS`] coordinates
/// (or more if a larger dimension is requested) from seed `seed + r`; every
/// dimension uses the leading coordinates of that one sample.
pub fn rc_comparison_experiment(
    k: usize,
    dims: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<RcComparisonRow>> {
    if k < 3 {
        return Err(invalid(format!("need at least 3 points, got {k}")));
    }
    if reps == 0 {
        return Err(invalid("need at least one repetition"));
    }
    if dims.contains(&0) {
        return Err(invalid("dimensions must be >= 1"));
    }
    let coords = dims
        .iter()
        .copied()
        .max()
        .unwrap_or(0)
        .max(RC_COMPARISON_COORDS);
    let (l1, l2) = (LpExponent::new(1.0)?, LpExponent::new(2.0)?);

    let wins: Vec<Vec<bool>> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<Vec<bool>> {
            let sample = gen_uniform_cube(k, coords, seed.wrapping_add(r as u64))?;
            dims.iter()
                .map(|&d| {
                    let xd = crate::dataset::prefix_dims(&sample, d)?;
                    Ok(mean_point_rc(&xd, l1)? > mean_point_rc(&xd, l2)?)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok(dims
        .iter()
        .enumerate()
        .map(|(di, &dim)| RcComparisonRow {
            dim,
            k_points: k,
            reps,
            fraction: wins.iter().filter(|w| w[di]).count() as f64 / reps as f64,
        })
        .collect())
}

/// Dataset-level RC and CV of all pairwise distances for one (dimension, p).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationRecord {
    #[serde(rename = "dim")]
    pub dimension: usize,
    pub p: LpExponent,
    pub rc: f64,
    pub cv: f64,
}

/// RC and CV for every (dimension, p) on nested prefixes of one `n`-point
/// uniform-cube sample. Records are ordered by dimension, then by the order
/// of `ps`.
pub fn concentration_sweep(
    n: usize,
    dims: &[usize],
    ps: &[LpExponent],
    seed: u64,
) -> Result<Vec<ConcentrationRecord>> {
    if n < 2 {
        return Err(invalid("concentration sweep needs n >= 2"));
    }
    let max_dim = dims
        .iter()
        .copied()
        .max()
        .ok_or_else(|| invalid("no dimensions requested"))?;
    let sample = gen_uniform_cube(n, max_dim, seed)?;
    sweep_matrix(&sample, dims, ps)
}

/// As [`concentration_sweep`], on a caller-supplied matrix.
pub fn sweep_matrix(
    sample: &DataMatrix,
    dims: &[usize],
    ps: &[LpExponent],
) -> Result<Vec<ConcentrationRecord>> {
    let per_p: Vec<Vec<(f64, f64)>> = ps
        .iter()
        .map(|&p| {
            pairwise_prefix_summaries(sample, p, dims, PairScale::PowerMean)?
                .iter()
                .map(|s| Ok((rc_from_summary(s)?, cv_from_summary(s)?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(dims.len() * ps.len());
    for (di, &dimension) in dims.iter().enumerate() {
        for (pi, &p) in ps.iter().enumerate() {
            let (rc, cv) = per_p[pi][di];
            out.push(ConcentrationRecord {
                dimension,
                p,
                rc,
                cv,
            });
        }
    }
    Ok(out)
}
