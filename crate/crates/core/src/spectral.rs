//! Dense real symmetric matrices, a cyclic Jacobi eigensolver and the
//! spectral functional calculus built on top of it.
//!
//! Every matrix function in the crate goes through [`EigenSystem::map`]:
//! `f(A) = U f(Λ) Uᵀ` with `U` the orthonormal eigenbasis of `A`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::scalar_fn::PiecewiseFn;

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_RTOL: f64 = 1e-14;
/// Loader tolerance on `max|M - Mᵀ|`, relative to `1 + max|M|`.
const ASYMMETRY_RTOL: f64 = 1e-8;

/// Wire form of a matrix: `{"dim": n, "rows": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

/// Dense real symmetric matrix, stored row-major.
///
/// Construction always symmetrises, so `get(i, j) == get(j, i)` holds
/// bit-for-bit and every entry is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix from rows, rejecting ragged, non-finite or visibly
    /// asymmetric input. Mild asymmetry is removed via `(M + Mᵀ)/2`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Input("matrix must have dim >= 1".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Input(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            if let Some(x) = row.iter().find(|x| !x.is_finite()) {
                return Err(Error::Input(format!("non-finite entry {x} in row {i}")));
            }
        }
        let max_abs = rows
            .iter()
            .flatten()
            .fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut asym = 0.0_f64;
        for i in 0..dim {
            for j in 0..i {
                asym = asym.max((rows[i][j] - rows[j][i]).abs());
            }
        }
        if asym > ASYMMETRY_RTOL * (1.0 + max_abs) {
            return Err(Error::Input(format!(
                "matrix is not symmetric: max |M - M^T| = {asym:e}"
            )));
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    /// Builds `(M + Mᵀ)/2` where `M[i][j] = entry(i, j)`.
    pub fn from_fn(dim: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim >= 1, "SymMatrix requires dim >= 1");
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = entry(i, j);
            }
        }
        for i in 0..dim {
            for j in 0..i {
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        Self { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| 0.0)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Largest absolute eigenvalue.
    pub fn operator_norm(&self) -> Result<f64> {
        Ok(eigh(self)?.operator_norm())
    }

    /// Copy with the symmetric pair `(i, j)`, `(j, i)` replaced.
    pub fn with_entry(&self, i: usize, j: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.data[i * self.dim + j] = value;
        out.data[j * self.dim + i] = value;
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// `Wᵀ · self · W` for a square `W` of matching size.
    pub fn congruence(&self, w: &Dense) -> Self {
        assert_eq!(w.rows, self.dim, "congruence: dimension mismatch");
        assert_eq!(w.cols, self.dim, "congruence: W must be square");
        let n = self.dim;
        // self * W
        let mut sw = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let s = self.get(i, k);
                if s == 0.0 {
                    continue;
                }
                for j in 0..n {
                    sw[i * n + j] += s * w.get(k, j);
                }
            }
        }
        Self::from_fn(n, |i, j| (0..n).map(|k| w.get(k, i) * sw[k * n + j]).sum())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }

    pub fn to_dense(&self) -> Dense {
        Dense {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            dim: self.dim,
            rows: self.rows(),
        }
    }
}

impl TryFrom<MatrixJson> for SymMatrix {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        if m.rows.len() != m.dim {
            return Err(Error::Input(format!(
                "declared dim {} but found {} rows",
                m.dim,
                m.rows.len()
            )));
        }
        Self::from_rows(&m.rows)
    }
}

impl From<SymMatrix> for MatrixJson {
    fn from(m: SymMatrix) -> Self {
        m.to_json()
    }
}

impl fmt::Display for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.data.chunks(self.dim) {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:>14.9}")).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix add: dimension mismatch");
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sub: dimension mismatch");
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<&SymMatrix> for f64 {
    type Output = SymMatrix;
    fn mul(self, rhs: &SymMatrix) -> SymMatrix {
        rhs.scaled(self)
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scaled(-1.0)
    }
}

/// Parses a matrix from its JSON wire form.
pub fn parse_matrix_json(text: &str) -> Result<SymMatrix> {
    let raw: MatrixJson =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("malformed matrix JSON: {e}")))?;
    SymMatrix::try_from(raw)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<SymMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix_json(&text)
}

/// General dense matrix, row-major. Used for eigenbases.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Dense {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { rows: n, cols: n, data }
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "ragged columns");
            for (i, &x) in c.iter().enumerate() {
                data[i * cols + j] = x;
            }
        }
        Self { rows, cols, data }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn matmul(&self, other: &Dense) -> Dense {
        assert_eq!(self.cols, other.rows, "matmul: inner dimension mismatch");
        let mut data = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Dense {
            rows: self.rows,
            cols: other.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Dense {
        let mut data = vec![0.0; self.rows * self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        Dense {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Largest entrywise deviation of `selfᵀ·self` from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        let g = self.transpose().matmul(self);
        let mut worst = 0.0_f64;
        for i in 0..g.rows {
            for j in 0..g.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.get(i, j) - target).abs());
            }
        }
        worst
    }
}

impl Serialize for Dense {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

/// Eigenvalues sorted non-increasing, with the matching orthonormal basis
/// (column `j` belongs to `eigenvalues[j]`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub basis: Dense,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// `U diag(g(λ)) Uᵀ`.
    pub fn map(&self, mut g: impl FnMut(f64) -> Result<f64>) -> Result<SymMatrix> {
        let mapped = self
            .eigenvalues
            .iter()
            .map(|&l| g(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.synthesize(&mapped))
    }

    /// `U diag(values) Uᵀ` for an arbitrary spectrum in this basis.
    pub fn synthesize(&self, values: &[f64]) -> SymMatrix {
        let n = self.dim();
        assert_eq!(values.len(), n);
        SymMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.basis.get(i, k) * values[k] * self.basis.get(j, k))
                .sum()
        })
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.synthesize(&self.eigenvalues)
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi sweeps.
///
/// Sweeps continue until the off-diagonal Frobenius norm is at most
/// `1e-14·‖A‖_F`. Eigenvalues are then stably sorted non-increasing, so
/// exact ties keep the order in which Jacobi left them.
pub fn eigh(a: &SymMatrix) -> Result<EigenSystem> {
    if !a.is_finite() {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    let n = a.dim;
    let mut m = a.data.clone();
    let mut v = Dense::identity(n);
    let target = OFF_DIAGONAL_RTOL * a.frobenius();

    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_norm(&m) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    m[k * n + p] = new_kp;
                    m[p * n + k] = new_kp;
                    m[k * n + q] = new_kq;
                    m[q * n + k] = new_kq;
                }
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v.data[k * n + p];
                    let vkq = v.data[k * n + q];
                    v.data[k * n + p] = c * vkp - s * vkq;
                    v.data[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off_norm(&m) > target {
        return Err(Error::NotConverged { sweeps: MAX_SWEEPS });
    }

    let raw: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // sort_by is stable: ties keep Jacobi's order.
    order.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]));
    let eigenvalues = order.iter().map(|&i| raw[i]).collect();
    let columns: Vec<Vec<f64>> = order.iter().map(|&j| v.column(j)).collect();
    Ok(EigenSystem {
        eigenvalues,
        basis: Dense::from_columns(&columns),
    })
}

/// Eigenvalues sorted non-increasing.
pub fn eigenvalues(a: &SymMatrix) -> Result<Vec<f64>> {
    Ok(eigh(a)?.eigenvalues)
}

/// Spectral calculus `f(A) = U f(Λ) Uᵀ`.
///
/// For functions whose domain is closed at a lower bound (sqrt at 0),
/// eigenvalues within `1e-12·(1+‖A‖)` below the bound are read as the bound:
/// they are rounding noise of matrices that are PSD by construction.
pub fn apply_fn(a: &SymMatrix, f: &PiecewiseFn) -> Result<SymMatrix> {
    let eig = eigh(a)?;
    let slack = 1e-12 * (1.0 + eig.operator_norm());
    let floor = f.closed_domain_floor();
    eig.map(|x| match floor {
        Some(lo) if x < lo && x >= lo - slack => f.evaluate(lo),
        _ => f.evaluate(x),
    })
}

/// `|A| = (AᵀA)^{1/2}`, i.e. eigenvalues replaced by their absolute values.
pub fn abs_matrix(a: &SymMatrix) -> Result<SymMatrix> {
    eigh(a)?.map(|x| Ok(x.abs()))
}

/// `A⁺ = (A + |A|)/2`, i.e. negative eigenvalues clipped to zero.
pub fn positive_part(a: &SymMatrix) -> Result<SymMatrix> {
    eigh(a)?.map(|x| Ok(x.max(0.0)))
}

pub fn min_eigenvalue(a: &SymMatrix) -> Result<f64> {
    Ok(*eigenvalues(a)?.last().expect("dim >= 1"))
}

pub fn is_psd(a: &SymMatrix, tol: f64) -> Result<bool> {
    Ok(min_eigenvalue(a)? >= -tol)
}

/// Loewner order `A ≥ B`.
pub fn ge(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    is_psd(&a.try_sub(b)?, tol)
}

/// Symmetrised standard-normal matrix rescaled to operator norm `scale`.
pub fn sample_sym<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> Result<SymMatrix> {
    if dim < 1 {
        return Err(Error::Input("dim must be >= 1".into()));
    }
    let raw: Vec<f64> = (0..dim * dim).map(|_| rng.sample(StandardNormal)).collect();
    let m = SymMatrix::from_fn(dim, |i, j| raw[i * dim + j]);
    normalise(m, scale)
}

/// `R·Rᵀ` with standard-normal `R`, rescaled to operator norm `scale`.
pub fn sample_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> Result<SymMatrix> {
    if dim < 1 {
        return Err(Error::Input("dim must be >= 1".into()));
    }
    let r: Vec<f64> = (0..dim * dim).map(|_| rng.sample(StandardNormal)).collect();
    let m = SymMatrix::from_fn(dim, |i, j| {
        (0..dim).map(|k| r[i * dim + k] * r[j * dim + k]).sum()
    });
    normalise(m, scale)
}

/// Haar-ish random orthogonal matrix: eigenbasis of a random symmetric one.
pub fn sample_orthogonal<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<Dense> {
    Ok(eigh(&sample_sym(rng, dim, 1.0)?)?.basis)
}

fn normalise(m: SymMatrix, scale: f64) -> Result<SymMatrix> {
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(Error::Input(format!("scale must be finite and >= 0, got {scale}")));
    }
    let norm = m.operator_norm()?;
    if norm == 0.0 {
        return Ok(m);
    }
    Ok(m.scaled(scale / norm))
}

pub fn random_sym(dim: usize, seed: u64, scale: f64) -> Result<SymMatrix> {
    sample_sym(&mut ChaCha8Rng::seed_from_u64(seed), dim, scale)
}

pub fn random_psd(dim: usize, seed: u64, scale: f64) -> Result<SymMatrix> {
    sample_psd(&mut ChaCha8Rng::seed_from_u64(seed), dim, scale)
}
