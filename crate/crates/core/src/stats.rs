//! Statistical comparison of classifiers across databases: proportion
//! z-test with a sample-size-dependent significance level, tied ranking,
//! Friedman test with Nemenyi critical distance, Wilcoxon signed-rank test
//! and best/worst frequency tallies.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::function::{erf::erfc, gamma::gamma_ur};

use crate::error::{invalid, Error, Result};
use crate::knn::QualityRecord;
use crate::metrics::LpExponent;

/// Significance level of the Friedman and Wilcoxon tests.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Result of a hypothesis test; `significant ⇔ p_value < alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub significant: bool,
}

impl TestOutcome {
    pub fn new(statistic: f64, p_value: f64, alpha: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            statistic,
            p_value,
            alpha,
            significant: p_value < alpha,
        }
    }
}

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Survival function `1 - F(x; df)` of the chi-square distribution.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(df as f64 / 2.0, x / 2.0)
    }
}

// ---------------------------------------------------------------------------
// Proportions
// ---------------------------------------------------------------------------

/// z-test for two proportions measured on the same sample size `n`:
/// `z = |p1 - p2| / sqrt(((p1 + p2)/n)(1 - (p1 + p2)/2))`, p-value `Φ(-z)`.
pub fn proportion_z_test(p1: f64, p2: f64, n: usize, alpha: f64) -> Result<TestOutcome> {
    if !(0.0..=1.0).contains(&p1) || !(0.0..=1.0).contains(&p2) {
        return Err(invalid(format!(
            "proportions must lie in [0, 1]: {p1}, {p2}"
        )));
    }
    if n == 0 {
        return Err(invalid("sample size must be positive"));
    }
    let pooled = 0.5 * (p1 + p2);
    if pooled <= 0.0 || pooled >= 1.0 {
        return Err(Error::Degenerate(format!(
            "pooled proportion {pooled} leaves no variance"
        )));
    }
    let z = (p1 - p2).abs() / ((p1 + p2) / n as f64 * (1.0 - pooled)).sqrt();
    Ok(TestOutcome::new(z, normal_cdf(-z), alpha))
}

/// Parameters of [`adaptive_alpha`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaPolicy {
    /// Expected effect size as a proportion.
    pub effect: f64,
    /// Bonferroni divisor (28 pairs of 8 exponents).
    pub n_comparisons: usize,
    pub floor: f64,
}

impl Default for AlphaPolicy {
    fn default() -> Self {
        Self {
            effect: 0.01,
            n_comparisons: 28,
            floor: 1e-5,
        }
    }
}

impl AlphaPolicy {
    pub fn alpha(&self, n: usize, n_pos: usize) -> Result<f64> {
        adaptive_alpha(n, n_pos, self.effect, self.n_comparisons, self.floor)
    }
}

/// Significance level for a database with `n` cases of which `n_pos` are
/// positive:
///
/// ```text
/// α = max{ Φ(-(d/s)·√(n/8)) / n_comparisons, floor },
/// d = effect·n,  s = √(n_pos (n - n_pos) / n)
/// ```
///
/// The effect is converted to a count so that `d/s` is dimensionless, and
/// the argument of Φ is negated so that α shrinks towards the floor as `n`
/// grows.
pub fn adaptive_alpha(
    n: usize,
    n_pos: usize,
    effect: f64,
    n_comparisons: usize,
    floor: f64,
) -> Result<f64> {
    if n_pos == 0 || n_pos >= n {
        return Err(Error::Degenerate(format!(
            "adaptive alpha needs both classes (n = {n}, n_pos = {n_pos})"
        )));
    }
    if effect.is_nan() || effect <= 0.0 || n_comparisons == 0 {
        return Err(invalid("effect must be positive and n_comparisons >= 1"));
    }
    let nf = n as f64;
    let d = effect * nf;
    let s = (n_pos as f64 * (n - n_pos) as f64 / nf).sqrt();
    let arg = d / s * (nf / 8.0).sqrt();
    Ok((normal_cdf(-arg) / n_comparisons as f64).max(floor))
}

// ---------------------------------------------------------------------------
// Ranks
// ---------------------------------------------------------------------------

/// Ranks `1..=m`, ascending (largest value gets rank `m`), ties averaged.
pub fn tied_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end share ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Per-database ranks (rows) of each classifier (columns) and their means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankMatrix {
    pub ranks: Vec<Vec<f64>>,
    pub mean_ranks: Vec<f64>,
}

impl RankMatrix {
    pub fn from_quality(quality: &[Vec<f64>]) -> Self {
        let ranks: Vec<Vec<f64>> = quality.iter().map(|row| tied_ranks(row)).collect();
        let m = ranks.first().map_or(0, Vec::len);
        let n = ranks.len() as f64;
        let mean_ranks = (0..m)
            .map(|i| ranks.iter().map(|r| r[i]).sum::<f64>() / n)
            .collect();
        Self { ranks, mean_ranks }
    }
}

fn check_quality(quality: &[Vec<f64>]) -> Result<(usize, usize)> {
    let n = quality.len();
    let m = quality.first().map_or(0, Vec::len);
    if n < 2 || m < 2 {
        return Err(invalid(format!(
            "Friedman test needs at least 2 databases and 2 classifiers ({n}x{m})"
        )));
    }
    if quality.iter().any(|r| r.len() != m) {
        return Err(invalid("quality matrix is ragged"));
    }
    if quality.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("quality matrix has non-finite entries"));
    }
    Ok((n, m))
}

/// Friedman test over an `N × m` quality matrix (databases × classifiers):
///
/// ```text
/// χ²_F = 4N²(m-1)(Σ R_i² - m(m+1)²/4) / (4 Σ Σ r_ji² - N m (m+1)²)
/// ```
///
/// with `m - 1` degrees of freedom. When every row is fully tied the
/// denominator vanishes and the statistic is reported as 0 with p-value 1.
pub fn friedman_test(quality: &[Vec<f64>], alpha: f64) -> Result<(TestOutcome, RankMatrix)> {
    let (n, m) = check_quality(quality)?;
    let ranks = RankMatrix::from_quality(quality);
    let (nf, mf) = (n as f64, m as f64);
    let sum_r2: f64 = ranks.mean_ranks.iter().map(|r| r * r).sum();
    let sum_rank_sq: f64 = ranks.ranks.iter().flatten().map(|r| r * r).sum();
    let numerator = 4.0 * nf * nf * (mf - 1.0) * (sum_r2 - mf * (mf + 1.0).powi(2) / 4.0);
    let denominator = 4.0 * sum_rank_sq - nf * mf * (mf + 1.0).powi(2);
    // exact zero in rank arithmetic; tolerance covers half-integer round-off
    let outcome = if denominator.abs() <= 1e-9 * nf * mf * (mf + 1.0).powi(2) {
        TestOutcome::new(0.0, 1.0, alpha)
    } else {
        let stat = (numerator / denominator).max(0.0);
        TestOutcome::new(stat, chi2_sf(stat, m - 1), alpha)
    };
    Ok((outcome, ranks))
}

/// Critical values `q_α` of the Nemenyi test (studentized range quantile
/// with infinite degrees of freedom, divided by √2), for m = 2..=20.
const NEMENYI_Q_005: [f64; 19] = [
    1.960, 2.344, 2.569, 2.728, 2.850, 2.948, 3.031, 3.102, 3.164, 3.219, 3.268, 3.313, 3.354,
    3.391, 3.426, 3.458, 3.489, 3.517, 3.544,
];
const NEMENYI_Q_010: [f64; 19] = [
    1.645, 2.052, 2.291, 2.460, 2.589, 2.693, 2.780, 2.855, 2.920, 2.978, 3.030, 3.077, 3.120,
    3.159, 3.196, 3.230, 3.261, 3.291, 3.319,
];

pub fn nemenyi_q(m: usize, alpha: f64) -> Result<f64> {
    let table = if (alpha - 0.05).abs() < 1e-12 {
        &NEMENYI_Q_005
    } else if (alpha - 0.10).abs() < 1e-12 {
        &NEMENYI_Q_010
    } else {
        return Err(invalid(format!("Nemenyi table has no alpha = {alpha}")));
    };
    if !(2..=20).contains(&m) {
        return Err(invalid(format!("Nemenyi table covers m = 2..=20, got {m}")));
    }
    Ok(table[m - 2])
}

/// `CD = q_α √(m(m+1) / (6N))`.
pub fn nemenyi_cd(m: usize, n: usize, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("Nemenyi CD needs N >= 1"));
    }
    let q = nemenyi_q(m, alpha)?;
    Ok(q * ((m * (m + 1)) as f64 / (6.0 * n as f64)).sqrt())
}

// ---------------------------------------------------------------------------
// Wilcoxon
// ---------------------------------------------------------------------------

/// Largest number of non-zero differences handled by exact enumeration.
pub const WILCOXON_EXACT_MAX: usize = 25;

/// Two-sided Wilcoxon signed-rank test of paired samples.
///
/// Zero differences are dropped and tied magnitudes get average ranks. The
/// statistic is `W+`, the rank sum of positive differences. The null
/// distribution is exact for up to [`WILCOXON_EXACT_MAX`] non-zero
/// differences; above that a normal approximation with tie and continuity
/// corrections is used. All-zero differences give p = 1.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<TestOutcome> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.is_empty() {
        return Err(invalid("Wilcoxon test needs at least one pair"));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Ok(TestOutcome::new(0.0, 1.0, DEFAULT_ALPHA));
    }
    let mags: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = tied_ranks(&mags);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let n = diffs.len();
    let p = if n <= WILCOXON_EXACT_MAX {
        exact_signed_rank_p(&ranks, w_plus)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut tie_term = 0.0;
        let mut sorted = mags.clone();
        sorted.sort_by(f64::total_cmp);
        for group in sorted.chunk_by(|x, y| x == y) {
            let t = group.len() as f64;
            tie_term += t * t * t - t;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
        2.0 * normal_cdf(-z)
    };
    Ok(TestOutcome::new(w_plus, p.min(1.0), DEFAULT_ALPHA))
}

/// Two-sided exact p-value of `W+ = w` given the (possibly half-integer)
/// ranks, by enumerating the sign assignments with a subset-sum count.
fn exact_signed_rank_p(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let all = 2f64.powi(ranks.len() as i32);
    let w2 = (2.0 * w).round() as usize;
    let lower: f64 = counts[..=w2].iter().sum::<f64>() / all;
    let upper: f64 = counts[w2..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

// ---------------------------------------------------------------------------
// Frequency comparison
// ---------------------------------------------------------------------------

/// Quality measure compared across exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Tnnsc,
    Accuracy,
    /// Sensitivity + specificity; only best/worst are tallied for it.
    SeSp,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Tnnsc, Measure::Accuracy, Measure::SeSp];

    pub fn label(self) -> &'static str {
        match self {
            Measure::Tnnsc => "TNNSC",
            Measure::Accuracy => "Accuracy",
            Measure::SeSp => "Se+Sp",
        }
    }

    pub fn value(self, r: &QualityRecord) -> f64 {
        match self {
            Measure::Tnnsc => r.tnnsc as f64,
            Measure::Accuracy => r.accuracy,
            Measure::SeSp => r.sensitivity + r.specificity,
        }
    }

    /// Proportion and its sample size (TNNSC counts `k·n` neighbour slots).
    fn proportion(self, r: &QualityRecord, k: usize) -> Option<(f64, usize, usize)> {
        match self {
            Measure::Tnnsc => Some((r.tnnsc as f64 / (k * r.n) as f64, k * r.n, k * r.n_pos)),
            Measure::Accuracy => Some((r.accuracy, r.n, r.n_pos)),
            Measure::SeSp => None,
        }
    }
}

/// Tallies for one exponent over all databases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub p: LpExponent,
    pub best: usize,
    pub worst: usize,
    /// `None` for measures without a significance test.
    pub insignificant_from_best: Option<usize>,
    pub insignificant_from_worst: Option<usize>,
}

/// Per-database details behind a [`FrequencyReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatabaseComparison {
    pub dataset: String,
    pub alpha: Option<f64>,
    pub best: f64,
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyReport {
    pub measure: Measure,
    pub databases: usize,
    pub rows: Vec<FrequencyRow>,
    pub per_database: Vec<DatabaseComparison>,
}

/// Groups records by dataset, keeping first-appearance order, and orders
/// each group by `ps`. Every (dataset, p) must occur exactly once.
pub fn group_by_dataset<'a>(
    records: &'a [QualityRecord],
    ps: &[LpExponent],
) -> Result<Vec<(String, Vec<&'a QualityRecord>)>> {
    let mut order: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(String, usize), &QualityRecord> = BTreeMap::new();
    for r in records {
        let Some(pi) = ps.iter().position(|&p| p == r.p) else {
            continue;
        };
        if !order.contains(&r.dataset) {
            order.push(r.dataset.clone());
        }
        if cells.insert((r.dataset.clone(), pi), r).is_some() {
            return Err(invalid(format!(
                "duplicate record for dataset '{}', p = {}",
                r.dataset, r.p
            )));
        }
    }
    order
        .into_iter()
        .map(|name| {
            let row = (0..ps.len())
                .map(|pi| {
                    cells.get(&(name.clone(), pi)).copied().ok_or_else(|| {
                        invalid(format!("dataset '{name}' has no record for p = {}", ps[pi]))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((name, row))
        })
        .collect()
}

/// Best/worst tallies per exponent, plus (for TNNSC and accuracy) how often
/// each exponent is not significantly different from the best or worst one
/// under the proportion z-test at the database's adaptive α.
///
/// `records` must hold one record per (dataset, p) for a single
/// preprocessing mode; `k` is the neighbourhood size used for TNNSC.
pub fn frequency_report(
    records: &[QualityRecord],
    ps: &[LpExponent],
    measure: Measure,
    k: usize,
    policy: &AlphaPolicy,
) -> Result<FrequencyReport> {
    let groups = group_by_dataset(records, ps)?;
    if groups.is_empty() {
        return Err(invalid("no records to compare"));
    }
    let tested = measure != Measure::SeSp;
    let mut rows: Vec<FrequencyRow> = ps
        .iter()
        .map(|&p| FrequencyRow {
            p,
            best: 0,
            worst: 0,
            insignificant_from_best: tested.then_some(0),
            insignificant_from_worst: tested.then_some(0),
        })
        .collect();
    let mut per_database = Vec::with_capacity(groups.len());

    for (name, recs) in &groups {
        let values: Vec<f64> = recs.iter().map(|r| measure.value(r)).collect();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let worst = values.iter().copied().fold(f64::INFINITY, f64::min);
        let mut alpha = None;
        if tested {
            let (_, size, pos) = measure.proportion(recs[0], k).expect("tested measure");
            alpha = Some(policy.alpha(size, pos)?);
        }
        let best_idx = values.iter().position(|&v| v == best).unwrap();
        let worst_idx = values.iter().position(|&v| v == worst).unwrap();
        for (i, row) in rows.iter_mut().enumerate() {
            row.best += usize::from(values[i] == best);
            row.worst += usize::from(values[i] == worst);
            if let Some(a) = alpha {
                let same_as = |j: usize| -> Result<bool> {
                    if values[i] == values[j] {
                        return Ok(true);
                    }
                    let (pi, size, _) = measure.proportion(recs[i], k).unwrap();
                    let (pj, _, _) = measure.proportion(recs[j], k).unwrap();
                    Ok(!proportion_z_test(pi, pj, size, a)?.significant)
                };
                if same_as(best_idx)? {
                    *row.insignificant_from_best.as_mut().unwrap() += 1;
                }
                if same_as(worst_idx)? {
                    *row.insignificant_from_worst.as_mut().unwrap() += 1;
                }
            }
        }
        per_database.push(DatabaseComparison {
            dataset: name.clone(),
            alpha,
            best,
            worst,
        });
    }
    Ok(FrequencyReport {
        measure,
        databases: groups.len(),
        rows,
        per_database,
    })
}
