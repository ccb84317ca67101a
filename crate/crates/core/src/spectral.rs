//! Covariance, symmetric eigendecomposition (cyclic Jacobi) and fractions of
//! variance explained.

use crate::dataset::DataMatrix;
use crate::error::{invalid, Error, Result};

/// Dense symmetric matrix stored in full row-major form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

/// Relative asymmetry accepted by [`SymMatrix::new`].
const SYMMETRY_TOL: f64 = 1e-9;

impl SymMatrix {
    /// Validates squareness and symmetry (|a_ij - a_ji| ≤ 1e-9·max(1, ‖A‖_F)),
    /// then symmetrises exactly.
    pub fn new(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("empty matrix"));
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        let tol = SYMMETRY_TOL * frobenius(&data).max(1.0);
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if (a - b).abs() > tol {
                    return Err(invalid(format!(
                        "matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                let m = 0.5 * (a + b);
                data[i * n + j] = m;
                data[j * n + i] = m;
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let data: Vec<f64> = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::new(rows.len(), data)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (i, v) in values.iter().enumerate() {
            data[i * n + i] = *v;
        }
        Self::new(n, data)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.data)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

fn frobenius(data: &[f64]) -> f64 {
    data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Column-centred `XᵀX / n` (population covariance).
pub fn covariance(x: &DataMatrix) -> Result<SymMatrix> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(invalid("covariance needs at least 2 rows"));
    }
    let mut means = vec![0.0; d];
    for r in x.row_iter() {
        for (m, v) in means.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut cov = vec![0.0; d * d];
    let mut centred = vec![0.0; d];
    for r in x.row_iter() {
        for ((c, v), m) in centred.iter_mut().zip(r).zip(&means) {
            *c = v - m;
        }
        for i in 0..d {
            let ci = centred[i];
            if ci == 0.0 {
                continue;
            }
            let row = &mut cov[i * d..(i + 1) * d];
            for j in i..d {
                row[j] += ci * centred[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / n as f64;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    SymMatrix::new(d, cov)
}

/// Descending eigenvalues and their fractions of variance explained.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    pub eigenvalues: Vec<f64>,
    pub fve: Vec<f64>,
}

/// Eigenvalues (descending) with unit eigenvectors; `vectors[k]` belongs to
/// `eigenvalues[k]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const NEGATIVE_CLAMP: f64 = 1e-9;

/// Cyclic Jacobi eigendecomposition.
///
/// Sweeps until every off-diagonal entry is below 1e-12·‖S‖_F (at most 100
/// sweeps). Eigenvalues in `[-1e-9·max(1, ‖S‖_F), 0)` are clamped to zero;
/// anything more negative is reported as an error since the inputs here are
/// covariance matrices.
pub fn sym_eigen_vectors(s: &SymMatrix) -> Result<EigenDecomposition> {
    let n = s.n;
    let mut a = s.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = s.frobenius_norm();
    let tol = OFF_DIAGONAL_TOL * norm;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let max_off = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].abs())
            .fold(0.0, f64::max);
        if max_off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Eigen(format!(
            "Jacobi did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let clamp = NEGATIVE_CLAMP * norm.max(1.0);
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n);
    for k in 0..n {
        let mut lambda = a[k * n + k];
        if lambda < 0.0 {
            if lambda < -clamp {
                return Err(Error::Eigen(format!(
                    "eigenvalue {lambda} is negative beyond round-off"
                )));
            }
            lambda = 0.0;
        }
        pairs.push((lambda, (0..n).map(|i| v[i * n + k]).collect()));
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let (eigenvalues, vectors) = pairs.into_iter().unzip();
    Ok(EigenDecomposition {
        eigenvalues,
        vectors,
    })
}

/// Eigenvalues of a symmetric matrix, descending, with their FVE. A zero
/// spectrum yields all-zero fractions.
pub fn sym_eigen(s: &SymMatrix) -> Result<SpectralSummary> {
    let eig = sym_eigen_vectors(s)?;
    let fve = fve(&eig.eigenvalues).unwrap_or_else(|_| vec![0.0; eig.eigenvalues.len()]);
    Ok(SpectralSummary {
        eigenvalues: eig.eigenvalues,
        fve,
    })
}

/// `f_i = λ_i / Σ λ_j`, order preserved.
pub fn fve(eigenvalues: &[f64]) -> Result<Vec<f64>> {
    if eigenvalues.iter().any(|&l| l < 0.0 || !l.is_finite()) {
        return Err(invalid("eigenvalues must be finite and non-negative"));
    }
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("all eigenvalues are zero".into()));
    }
    Ok(eigenvalues.iter().map(|l| l / total).collect())
}
