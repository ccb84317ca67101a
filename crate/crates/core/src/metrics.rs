//! lp functionals and distances for every exponent `p ∈ (0, ∞]`, and
//! streaming summaries over all pairwise distances of a point set.
//!
//! `|v|^p` is evaluated per coordinate with an exponent-specific kernel
//! (plain abs for p = 1, squares for p = 2, `sqrt` for p = 0.5, integer powers
//! for p = 4 and 10, `powf` otherwise). Terms are accumulated in eight
//! interleaved lanes, coordinate `j` always feeding lane `j % 8`, so a
//! distance over the first `d'` coordinates is bit-identical whether it is
//! computed on its own or as a checkpoint of a longer scan.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::concentration::DistanceSummary;
use crate::dataset::DataMatrix;
use crate::error::{invalid, Error, Result};

/// The exponent `p` of an lp functional; `p > 0`, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LpExponent(f64);

impl LpExponent {
    pub const INFINITY: LpExponent = LpExponent(f64::INFINITY);

    /// The eight exponents used throughout the experiments.
    pub const CANONICAL: [LpExponent; 8] = [
        LpExponent(0.01),
        LpExponent(0.1),
        LpExponent(0.5),
        LpExponent(1.0),
        LpExponent(2.0),
        LpExponent(4.0),
        LpExponent(10.0),
        LpExponent(f64::INFINITY),
    ];

    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 {
            Ok(Self(p))
        } else {
            Err(invalid(format!("lp exponent must be > 0, got {p}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Parses a comma-separated list such as `0.5,1,2,inf`.
    pub fn parse_list(s: &str) -> Result<Vec<LpExponent>> {
        s.split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for LpExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for LpExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if matches!(t.as_str(), "inf" | "infinity" | "∞") {
            return Ok(Self::INFINITY);
        }
        let p: f64 = t
            .parse()
            .map_err(|_| invalid(format!("cannot parse '{s}' as an lp exponent")))?;
        Self::new(p)
    }
}

// JSON has no infinity, so the infinite exponent travels as the string "inf".
impl Serialize for LpExponent {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            ser.serialize_str("inf")
        } else {
            ser.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for LpExponent {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let parsed = match Raw::deserialize(de)? {
            Raw::Num(p) => LpExponent::new(p),
            Raw::Str(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

const LANES: usize = 8;

trait Kernel: Copy + Send + Sync {
    /// Contribution of one coordinate, given its absolute value.
    fn term(self, v: f64) -> f64;
    fn combine(a: f64, b: f64) -> f64 {
        a + b
    }
    /// Maps the accumulated terms back to the functional value.
    fn root(self, s: f64) -> f64;
    /// Root of the per-coordinate mean of the terms (power mean).
    fn mean_root(self, s: f64, d: usize) -> f64 {
        self.root(s / d as f64)
    }
}

#[derive(Clone, Copy)]
struct L1;
#[derive(Clone, Copy)]
struct L2;
#[derive(Clone, Copy)]
struct LInf;
#[derive(Clone, Copy)]
struct LHalf;
#[derive(Clone, Copy)]
struct L4;
#[derive(Clone, Copy)]
struct LInt {
    n: i32,
    inv: f64,
}
/// Integer exponent known at compile time; `powi` expands to multiplications.
#[derive(Clone, Copy)]
struct LConst<const N: i32>;
#[derive(Clone, Copy)]
struct LFrac {
    p: f64,
    inv: f64,
}

impl Kernel for L1 {
    #[inline(always)]
    fn term(self, v: f64) -> f64 {
        v
    }
    #[inline(always)]
    fn root(self, s: f64) -> f64 {
        s
    }
}

impl Kernel for L2 {
    #[inline(always)]
    fn term(self, v: f64) -> f64 {
        v * v
    }
    #[inline(always)]
    fn root(self, s: f64) -> f64 {
        s.sqrt()
    }
}

impl Kernel for LInf {
    #[inline(always)]
    fn term(self, v: f64) -> f64 {
        v
    }
    #[inline(always)]
    fn combine(a: f64, b: f64) -> f64 {
        a.max(b)
    }
    #[inline(always)]
    fn root(self, s: f64) -> f64 {
        s
    }
    #[inline(always)]
    fn mean_root(self, s: f64, _d: usize) -> f64 {
        s
    }
}

impl Kernel for LHalf {
    #[inline(always)]
    fn term(self, v: f64) -> f64 {
        v.sqrt()
    }
    #[inline(always)]
    fn root(self, s: f64) -> f64 {
        s * s
    }
}

impl Kernel for L4 {
    #[inline(always)]
    fn term(self, v: f64) -> f64 {
        let q = v * v;
        q * q
    }
    #[inline(always)]
    fn root(self, s: f64) -> f64 {
        s.sqrt().sqrt()
    }
}

impl Kernel for LInt {
    #[inline(always)]
    fn term(self, v: f64) -> f64 {
        v.powi(self.n)
    }
    #[inline(always)]
    fn root(self, s: f64) -> f64 {
        s.powf(self.inv)
    }
}

impl<const N: i32> Kernel for LConst<N> {
    #[inline(always)]
    fn term(self, v: f64) -> f64 {
        v.powi(N)
    }
    #[inline(always)]
    fn root(self, s: f64) -> f64 {
        s.powf(1.0 / N as f64)
    }
}

impl Kernel for LFrac {
    #[inline(always)]
    fn term(self, v: f64) -> f64 {
        if v == 0.0 {
            0.0
        } else {
            (self.p * v.ln()).exp()
        }
    }
    #[inline(always)]
    fn root(self, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            (self.inv * s.ln()).exp()
        }
    }
}

/// Runs `$body` with `$k` bound to the kernel for exponent `$p`.
macro_rules! with_kernel {
    ($p:expr, |$k:ident| $body:expr) => {{
        let p: f64 = $p.value();
        if p.is_infinite() {
            let $k = LInf;
            $body
        } else if p == 1.0 {
            let $k = L1;
            $body
        } else if p == 2.0 {
            let $k = L2;
            $body
        } else if p == 0.5 {
            let $k = LHalf;
            $body
        } else if p == 4.0 {
            let $k = L4;
            $body
        } else if p == 10.0 {
            let $k = LConst::<10>;
            $body
        } else if p.fract() == 0.0 && p <= 64.0 {
            let $k = LInt {
                n: p as i32,
                inv: 1.0 / p,
            };
            $body
        } else {
            let $k = LFrac { p, inv: 1.0 / p };
            $body
        }
    }};
}

#[inline(always)]
fn reduce<K: Kernel>(l: &[f64; LANES]) -> f64 {
    K::combine(
        K::combine(K::combine(l[0], l[1]), K::combine(l[2], l[3])),
        K::combine(K::combine(l[4], l[5]), K::combine(l[6], l[7])),
    )
}

#[inline(always)]
fn accumulate<K: Kernel>(k: K, x: &[f64], y: &[f64]) -> f64 {
    let mut lanes = [0.0; LANES];
    let xc = x.chunks_exact(LANES);
    let yc = y.chunks_exact(LANES);
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        for l in 0..LANES {
            lanes[l] = K::combine(lanes[l], k.term((a[l] - b[l]).abs()));
        }
    }
    for (l, (a, b)) in xr.iter().zip(yr).enumerate() {
        lanes[l] = K::combine(lanes[l], k.term((a - b).abs()));
    }
    reduce::<K>(&lanes)
}

#[inline(always)]
fn accumulate_single<K: Kernel>(k: K, x: &[f64]) -> f64 {
    let mut lanes = [0.0; LANES];
    let xc = x.chunks_exact(LANES);
    let xr = xc.remainder();
    for a in xc {
        for l in 0..LANES {
            lanes[l] = K::combine(lanes[l], k.term(a[l].abs()));
        }
    }
    for (l, a) in xr.iter().enumerate() {
        lanes[l] = K::combine(lanes[l], k.term(a.abs()));
    }
    reduce::<K>(&lanes)
}

/// Accumulated terms of `x - y` at each checkpoint length in `ends`
/// (strictly increasing, last ≤ len). Bit-identical to [`accumulate`] on
/// the corresponding prefixes.
#[inline(always)]
fn accumulate_prefixes<K: Kernel>(k: K, x: &[f64], y: &[f64], ends: &[usize], out: &mut [f64]) {
    let mut lanes = [0.0; LANES];
    let mut j = 0;
    for (slot, &end) in out.iter_mut().zip(ends) {
        while j < end && j % LANES != 0 {
            lanes[j % LANES] = K::combine(lanes[j % LANES], k.term((x[j] - y[j]).abs()));
            j += 1;
        }
        while j + LANES <= end {
            let (a, b) = (&x[j..j + LANES], &y[j..j + LANES]);
            for l in 0..LANES {
                lanes[l] = K::combine(lanes[l], k.term((a[l] - b[l]).abs()));
            }
            j += LANES;
        }
        while j < end {
            lanes[j % LANES] = K::combine(lanes[j % LANES], k.term((x[j] - y[j]).abs()));
            j += 1;
        }
        *slot = reduce::<K>(&lanes);
    }
}

// ---------------------------------------------------------------------------
// Public functionals
// ---------------------------------------------------------------------------

/// `(Σ|x_i|^p)^(1/p)`, or `max |x_i|` for `p = ∞`.
pub fn lp_functional(x: &[f64], p: LpExponent) -> f64 {
    with_kernel!(p, |k| k.root(accumulate_single(k, x)))
}

/// lp distance between two equal-length vectors.
pub fn lp_distance(x: &[f64], y: &[f64], p: LpExponent) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(with_kernel!(p, |k| k.root(accumulate(k, x, y))))
}

/// Distances from `query` to every row of `x`.
pub fn distances_from(x: &DataMatrix, query: &[f64], p: LpExponent) -> Result<Vec<f64>> {
    if query.len() != x.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            actual: query.len(),
        });
    }
    Ok(with_kernel!(p, |k| x
        .row_iter()
        .map(|r| k.root(accumulate(k, r, query)))
        .collect()))
}

// ---------------------------------------------------------------------------
// Pairwise summaries
// ---------------------------------------------------------------------------

/// Moments of one row's distances, shifted by the row's first distance so
/// that no division happens in the inner loop.
#[derive(Clone, Copy)]
struct ShiftedMoments {
    count: u64,
    shift: f64,
    sum: f64,
    sumsq: f64,
    min: f64,
    max: f64,
}

impl ShiftedMoments {
    const EMPTY: Self = Self {
        count: 0,
        shift: 0.0,
        sum: 0.0,
        sumsq: 0.0,
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };

    #[inline(always)]
    fn push(&mut self, v: f64) {
        if self.count == 0 {
            self.shift = v;
        }
        let dv = v - self.shift;
        self.count += 1;
        self.sum += dv;
        self.sumsq += dv * dv;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    fn finish(&self) -> Option<DistanceSummary> {
        if self.count == 0 {
            return None;
        }
        let c = self.count as f64;
        let mean_shift = self.sum / c;
        let m2 = (self.sumsq - self.sum * mean_shift).max(0.0);
        Some(DistanceSummary::from_parts(
            self.count,
            self.shift + mean_shift,
            m2,
            self.min,
            self.max,
        ))
    }
}

/// Which quantity the prefix summaries describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairScale {
    /// The lp distance itself.
    Distance,
    /// The lp distance divided by `d'^(1/p)` (the power mean of the
    /// coordinate differences). Ratios such as relative contrast and
    /// coefficient of variation are unchanged, and the values stay bounded
    /// by the largest coordinate difference, so tiny exponents cannot
    /// overflow.
    PowerMean,
}

fn prefix_row_moments<K: Kernel>(
    k: K,
    x: &DataMatrix,
    i: usize,
    ends: &[usize],
    scale: PairScale,
) -> Vec<ShiftedMoments> {
    let mut acc = vec![ShiftedMoments::EMPTY; ends.len()];
    let mut sums = vec![0.0; ends.len()];
    let xi = x.row(i);
    for j in i + 1..x.rows() {
        accumulate_prefixes(k, xi, x.row(j), ends, &mut sums);
        for ((m, &s), &d) in acc.iter_mut().zip(&sums).zip(ends) {
            let v = match scale {
                PairScale::Distance => k.root(s),
                PairScale::PowerMean => k.mean_root(s, d),
            };
            m.push(v);
        }
    }
    acc
}

/// Summaries of all `n(n-1)/2` pairwise distances for each prefix length in
/// `dims` (1 ≤ dim ≤ d, any order, duplicates allowed). The result is
/// aligned with `dims`.
///
/// Work is split by row (row `i` against rows `j > i`) and the per-row
/// partials are merged in row order, so the output does not depend on the
/// thread count.
pub fn pairwise_prefix_summaries(
    x: &DataMatrix,
    p: LpExponent,
    dims: &[usize],
    scale: PairScale,
) -> Result<Vec<DistanceSummary>> {
    if x.rows() < 2 {
        return Err(invalid(format!(
            "pairwise summary needs at least 2 points, got {}",
            x.rows()
        )));
    }
    if dims.is_empty() {
        return Err(invalid("no dimensions requested"));
    }
    if let Some(&bad) = dims.iter().find(|&&d| d == 0 || d > x.cols()) {
        return Err(invalid(format!("dimension {bad} outside 1..={}", x.cols())));
    }
    let mut ends: Vec<usize> = dims.to_vec();
    ends.sort_unstable();
    ends.dedup();

    let partials: Vec<Vec<ShiftedMoments>> = with_kernel!(p, |k| (0..x.rows() - 1)
        .into_par_iter()
        .map(|i| prefix_row_moments(k, x, i, &ends, scale))
        .collect());

    let mut merged: Vec<Option<DistanceSummary>> = vec![None; ends.len()];
    for row in &partials {
        for (slot, part) in merged.iter_mut().zip(row) {
            if let Some(s) = part.finish() {
                *slot = Some(match slot.take() {
                    None => s,
                    Some(acc) => acc.merge(&s),
                });
            }
        }
    }
    let merged: Vec<DistanceSummary> = merged
        .into_iter()
        .map(|s| s.expect("n >= 2 gives at least one pair"))
        .collect();
    Ok(dims
        .iter()
        .map(|d| merged[ends.binary_search(d).unwrap()])
        .collect())
}

/// Exact min, max, mean, population variance and count of all pairwise lp
/// distances, streamed without materialising them.
pub fn pairwise_summary(x: &DataMatrix, p: LpExponent) -> Result<DistanceSummary> {
    Ok(pairwise_prefix_summaries(x, p, &[x.cols()], PairScale::Distance)?[0])
}
