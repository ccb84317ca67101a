//! Intrinsic dimension estimators: attribute count, the three PCA rules
//! (Kaiser, broken stick, condition number), Fisher separability dimension
//! and box-counting fractal dimension; plus the correlation and
//! through-origin regression helpers used to compare them across datasets.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{preprocess_matrix, DataMatrix, LabeledDataset, PreprocessMode};
use crate::error::{invalid, Error, Result};
use crate::spectral::{covariance, fve, sym_eigen_vectors};

/// Relative slack for `≥` comparisons of fractions that are equal in exact
/// arithmetic but not after rounding (e.g. a flat spectrum against `1/d`).
const TIE_EPS: f64 = 1e-12;

/// Parameters of the dimension estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionConfig {
    /// `C` of the condition-number rule.
    pub condition_number: f64,
    /// `α` of Fisher separability.
    pub alpha: f64,
    /// Box sizes for box counting; `None` selects dyadic sizes adaptively
    /// (see [`default_box_curve`]).
    pub box_scales: Option<Vec<f64>>,
}

impl Default for DimensionConfig {
    fn default() -> Self {
        Self {
            condition_number: 10.0,
            alpha: 0.8,
            box_scales: None,
        }
    }
}

impl DimensionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.condition_number.is_nan() || self.condition_number <= 1.0 {
            return Err(invalid(format!(
                "condition number must exceed 1, got {}",
                self.condition_number
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if let Some(scales) = &self.box_scales {
            validate_scales(scales)?;
            if scales.windows(2).any(|w| w[1] >= w[0]) {
                return Err(invalid("box scales must be strictly decreasing"));
            }
        }
        Ok(())
    }
}

fn validate_scales(scales: &[f64]) -> Result<()> {
    if scales.is_empty() {
        return Err(invalid("empty box scale list"));
    }
    if let Some(r) = scales.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(invalid(format!("box scale {r} outside (0, 1]")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// PCA rules
// ---------------------------------------------------------------------------

/// Kaiser rule: number of components with `f_i ≥ 1/d`.
pub fn pca_kaiser(fve: &[f64]) -> usize {
    if fve.is_empty() {
        return 0;
    }
    let threshold = 1.0 / fve.len() as f64;
    fve.iter()
        .filter(|&&f| f >= threshold * (1.0 - TIE_EPS))
        .count()
}

/// Expected ordered fragment lengths of a unit stick broken at random into
/// `d` pieces: `b_i = (1/d) Σ_{j=i..d} 1/j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrokenStickThresholds(Vec<f64>);

impl BrokenStickThresholds {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

pub fn broken_stick_thresholds(d: usize) -> Result<BrokenStickThresholds> {
    if d == 0 {
        return Err(invalid("broken stick needs d >= 1"));
    }
    // Tail sums in double-double so each threshold is rounded once.
    let df = d as f64;
    let mut b = vec![0.0; d];
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for i in (1..=d).rev() {
        let j = i as f64;
        let r = 1.0 / j;
        let r_lo = (-r).mul_add(j, 1.0) / j;
        let (s, e) = two_sum(hi, r);
        let (h, l) = fast_two_sum(s, e + lo + r_lo);
        hi = h;
        lo = l;
        let q = hi / df;
        let rem = (-q).mul_add(df, hi) + lo;
        b[i - 1] = q + rem / df;
    }
    Ok(BrokenStickThresholds(b))
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Broken-stick rule: longest prefix with `f_i ≥ b_i` for every `i ≤ k`.
pub fn pca_broken_stick(fve: &[f64]) -> usize {
    let Ok(b) = broken_stick_thresholds(fve.len()) else {
        return 0;
    };
    fve.iter()
        .zip(b.values())
        .take_while(|(&f, &bi)| f >= bi * (1.0 - TIE_EPS))
        .count()
}

/// Condition-number rule: smallest `k ≥ 1` with `λ_{k+1} / λ_1 < 1/C`,
/// taking `λ_{d+1} = 0`.
pub fn pca_condition_number(eigenvalues: &[f64], c: f64) -> Result<usize> {
    if c.is_nan() || c <= 1.0 {
        return Err(invalid(format!("condition number must exceed 1, got {c}")));
    }
    let l1 = match eigenvalues.first() {
        Some(&l) if l > 0.0 => l,
        _ => return Err(Error::Degenerate("zero spectrum".into())),
    };
    let d = eigenvalues.len();
    Ok((1..=d)
        .find(|&k| eigenvalues.get(k).copied().unwrap_or(0.0) / l1 < 1.0 / c)
        .unwrap_or(d))
}

// ---------------------------------------------------------------------------
// Fisher separability
// ---------------------------------------------------------------------------

/// `x` is α-Fisher separable from `y` iff `(x, y) ≤ α (x, x)`.
pub fn is_fisher_separable(x: &[f64], y: &[f64], alpha: f64) -> bool {
    dot(x, y) <= alpha * dot(x, x)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Mean inseparability over the usable points of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparabilityFraction {
    /// Mean over points `x` of the fraction of other points `y` with
    /// `(x, y) > α (x, x)`.
    pub fraction: f64,
    /// Zero vectors skipped because `(x, x) = 0`.
    pub excluded: usize,
}

/// Mean α-inseparability fraction of the rows of `points`, applied as given.
/// Zero rows are skipped and counted in `excluded`.
pub fn separability_fraction(points: &DataMatrix, alpha: f64) -> Result<SeparabilityFraction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let usable: Vec<&[f64]> = points.row_iter().filter(|r| dot(r, r) > 0.0).collect();
    let excluded = points.rows() - usable.len();
    if usable.len() < 2 {
        return Err(Error::Degenerate(format!(
            "separability needs two non-zero points ({} excluded of {})",
            excluded,
            points.rows()
        )));
    }
    let m = usable.len();
    let violations: Vec<usize> = usable
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let bound = alpha * dot(x, x);
            usable
                .iter()
                .enumerate()
                .filter(|&(j, y)| j != i && dot(x, y) > bound)
                .count()
        })
        .collect();
    let fraction = violations
        .iter()
        .map(|&v| v as f64 / (m - 1) as f64)
        .sum::<f64>()
        / m as f64;
    Ok(SeparabilityFraction { fraction, excluded })
}

/// Centres `x`, projects onto the principal components kept by the
/// condition-number rule, whitens each component to unit variance and
/// scales every point to unit length. Points at the centroid stay zero.
pub fn sphere_for_separability(x: &DataMatrix, c: f64) -> Result<DataMatrix> {
    let eig = sym_eigen_vectors(&covariance(x)?)?;
    let k = pca_condition_number(&eig.eigenvalues, c)?;
    let d = x.cols();
    let mut means = vec![0.0; d];
    for r in x.row_iter() {
        for (m, v) in means.iter_mut().zip(r) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= x.rows() as f64);

    let mut out = Vec::with_capacity(x.rows() * k);
    let mut centred = vec![0.0; d];
    let mut z = vec![0.0; k];
    for r in x.row_iter() {
        for ((c, v), m) in centred.iter_mut().zip(r).zip(&means) {
            *c = v - m;
        }
        for (zc, (vec, lambda)) in z.iter_mut().zip(eig.vectors.iter().zip(&eig.eigenvalues)) {
            *zc = dot(&centred, vec) / lambda.sqrt();
        }
        let norm = dot(&z, &z).sqrt();
        if norm > 0.0 {
            out.extend(z.iter().map(|v| v / norm));
        } else {
            out.extend(std::iter::repeat_n(0.0, k));
        }
    }
    DataMatrix::new(x.rows(), k, out)
}

/// Lower and upper bracket of the separability dimension search.
pub const SEPARABILITY_BRACKET: (f64, f64) = (0.1, 10_000.0);
const BISECTION_TOL: f64 = 1e-6;

/// Probability that a point of the uniform distribution on the unit sphere
/// in `n` dimensions is α-inseparable from another:
/// `(1 - α²)^((n+1)/2) / (α √(2π n))`. Returned as a natural logarithm.
pub fn ln_sphere_inseparability(n: f64, alpha: f64) -> f64 {
    0.5 * (n + 1.0) * (1.0 - alpha * alpha).ln()
        - alpha.ln()
        - 0.5 * (2.0 * std::f64::consts::PI * n).ln()
}

/// Separability dimension with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparabilityEstimate {
    pub dimension: f64,
    pub fraction: f64,
    /// The inseparability fraction fell outside the range the sphere model
    /// can produce on the bracket; `dimension` is the nearer bracket end.
    pub saturated: bool,
    pub excluded: usize,
}

/// Dimension `n` of the uniform sphere whose inseparability probability
/// equals `fraction`, found by bisection on [`SEPARABILITY_BRACKET`].
pub fn invert_inseparability(fraction: f64, alpha: f64) -> (f64, bool) {
    let (mut lo, mut hi) = SEPARABILITY_BRACKET;
    if fraction <= 0.0 {
        return (hi, true);
    }
    let target = fraction.ln();
    let f = |n: f64| ln_sphere_inseparability(n, alpha) - target;
    if f(lo) <= 0.0 {
        return (lo, true);
    }
    if f(hi) >= 0.0 {
        return (hi, true);
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi), false)
}

/// Fisher separability dimension of `x` (sphered per
/// [`sphere_for_separability`], then inverted through the sphere model).
pub fn separability_dimension(
    x: &DataMatrix,
    cfg: &DimensionConfig,
) -> Result<SeparabilityEstimate> {
    cfg.validate()?;
    let sphered = sphere_for_separability(x, cfg.condition_number)?;
    let sep = separability_fraction(&sphered, cfg.alpha)?;
    let (dimension, saturated) = invert_inseparability(sep.fraction, cfg.alpha);
    Ok(SeparabilityEstimate {
        dimension,
        fraction: sep.fraction,
        saturated,
        excluded: sep.excluded,
    })
}

// ---------------------------------------------------------------------------
// Box counting
// ---------------------------------------------------------------------------

/// Occupied-cell counts `N(r)` per box size `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCountCurve {
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
}

fn count_cells(unit: &DataMatrix, r: f64) -> usize {
    let cells = (1.0 / r).ceil() as u64;
    let last = cells.saturating_sub(1);
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(unit.rows());
    for row in unit.row_iter() {
        let key: Vec<u64> = row
            .iter()
            .map(|&v| ((v / r).floor() as u64).min(last))
            .collect();
        seen.insert(key);
    }
    seen.len()
}

/// Counts occupied cells of the grid with side `r` anchored at the origin,
/// after min-max normalising `x` to the unit cube.
pub fn box_count(x: &DataMatrix, scales: &[f64]) -> Result<BoxCountCurve> {
    validate_scales(scales)?;
    let unit = preprocess_matrix(x, PreprocessMode::Minmax);
    let counts = scales.par_iter().map(|&r| count_cells(&unit, r)).collect();
    Ok(BoxCountCurve {
        scales: scales.to_vec(),
        counts,
    })
}

const MAX_DYADIC_LEVEL: i32 = 24;
const MIN_USABLE_SCALES: usize = 3;

/// Adaptive dyadic curve: `r = 2^-j` for `j = 1, 2, …`, stopping once
/// `N(r) > n/2` (the grid is saturated) or every point has its own cell,
/// provided at least three scales were collected.
pub fn default_box_curve(x: &DataMatrix) -> BoxCountCurve {
    let unit = preprocess_matrix(x, PreprocessMode::Minmax);
    let n = x.rows();
    let mut curve = BoxCountCurve {
        scales: Vec::new(),
        counts: Vec::new(),
    };
    for j in 1..=MAX_DYADIC_LEVEL {
        let r = 2f64.powi(-j);
        let count = count_cells(&unit, r);
        curve.scales.push(r);
        curve.counts.push(count);
        if (2 * count > n || count == n) && curve.scales.len() >= MIN_USABLE_SCALES {
            break;
        }
    }
    curve
}

/// Box-counting dimension: slope of the through-origin regression of
/// `ln N(r)` on `ln(1/r)`; scales with `r = 1` carry no information and are
/// skipped.
pub fn fractal_dimension(x: &DataMatrix, cfg: &DimensionConfig) -> Result<f64> {
    if x.rows() < 2 {
        return Err(invalid("fractal dimension needs at least 2 points"));
    }
    let curve = match &cfg.box_scales {
        Some(scales) => box_count(x, scales)?,
        None => default_box_curve(x),
    };
    fractal_dimension_from_curve(&curve)
}

pub fn fractal_dimension_from_curve(curve: &BoxCountCurve) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .scales
        .iter()
        .zip(&curve.counts)
        .filter(|(&r, _)| r < 1.0)
        .map(|(&r, &n)| ((1.0 / r).ln(), (n as f64).ln()))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 box sizes below 1, got {}",
            xs.len()
        )));
    }
    slope_through_origin(&xs, &ys)
}

// ---------------------------------------------------------------------------
// Regression and correlation
// ---------------------------------------------------------------------------

/// Least-squares slope of `y = b x` (no intercept): `Σxy / Σx²`.
pub fn slope_through_origin(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(invalid("empty regression input"));
    }
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all regressors are zero".into()));
    }
    Ok(dot(xs, ys) / sxx)
}

/// Pearson correlation matrix of equal-length columns; diagonal exactly 1.
pub fn pearson_correlation_matrix(columns: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let len = columns.first().map_or(0, Vec::len);
    if len < 2 {
        return Err(invalid("correlation needs columns of length >= 2"));
    }
    let mut centred = Vec::with_capacity(columns.len());
    for (k, c) in columns.iter().enumerate() {
        if c.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                actual: c.len(),
            });
        }
        let mean = c.iter().sum::<f64>() / len as f64;
        let dev: Vec<f64> = c.iter().map(|v| v - mean).collect();
        let ss = dot(&dev, &dev);
        if ss == 0.0 {
            return Err(Error::Degenerate(format!("column {k} has zero variance")));
        }
        centred.push((dev, ss.sqrt()));
    }
    let m = columns.len();
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        out[i][i] = 1.0;
        for j in i + 1..m {
            let r = dot(&centred[i].0, &centred[j].0) / (centred[i].1 * centred[j].1);
            let r = r.clamp(-1.0, 1.0);
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// All estimators
// ---------------------------------------------------------------------------

/// The six dimension estimates of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionReport {
    pub n_attr: usize,
    pub pca_k: usize,
    pub pca_bs: usize,
    pub pca_cn: usize,
    pub sep_d: f64,
    pub frac_d: f64,
    /// Whether `sep_d` sits at a bracket end of the sphere-model inversion.
    pub sep_saturated: bool,
}

pub fn estimate_matrix(x: &DataMatrix, cfg: &DimensionConfig) -> Result<DimensionReport> {
    cfg.validate()?;
    let eig = sym_eigen_vectors(&covariance(x)?)?;
    let fractions = fve(&eig.eigenvalues)?;
    let sep = separability_dimension(x, cfg)?;
    Ok(DimensionReport {
        n_attr: x.cols(),
        pca_k: pca_kaiser(&fractions),
        pca_bs: pca_broken_stick(&fractions),
        pca_cn: pca_condition_number(&eig.eigenvalues, cfg.condition_number)?,
        sep_d: sep.dimension,
        frac_d: fractal_dimension(x, cfg)?,
        sep_saturated: sep.saturated,
    })
}

/// Runs every estimator on the feature matrix of `ds`.
pub fn estimate_all(ds: &LabeledDataset, cfg: &DimensionConfig) -> Result<DimensionReport> {
    estimate_matrix(&ds.data, cfg)
}
