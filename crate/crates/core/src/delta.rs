//! Dominated majorisation vectors.
//!
//! `δ(C; A)` is the vector whose prefix sums are the one-sided derivatives
//! `d/dt|₀₊ Σ_{j≤k} λ↓_j(A + tC)`. It equals the diagonal of `C` in an
//! eigenbasis of `A` (eigenvalues descending) in which each degenerate
//! eigenspace has been rotated to diagonalise the compression of `C` onto
//! it. Entry order is meaningful and must not be sorted away.

use serde::Serialize;

use crate::error::{check_dims, Error, Result};
use crate::majorization::{
    dominated_weak_majorize, partial_sums, strong_majorize, weak_majorize, MajReport, Tolerance,
};
use crate::scalar_fn::PiecewiseFn;
use crate::spectral::{apply_fn, eigenvalues, eigh, Dense, SymMatrix};

/// Relative width used to group eigenvalues of `A` into one eigenspace.
pub const DEFAULT_CLUSTER_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub eigenvalue_of_a: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaVector {
    /// Unsorted; sorted non-increasing inside each cluster.
    pub values: Vec<f64>,
    /// Eigenspaces of `A`, in descending eigenvalue order.
    pub clusters: Vec<Cluster>,
    /// Orthogonal `W` with `WᵀAW` diagonal descending and
    /// `diag(WᵀCW) = values`.
    pub basis_used: Dense,
}

impl DeltaVector {
    pub fn partial_sums(&self) -> Vec<f64> {
        partial_sums(&self.values)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub fn default_cluster_tol(a_norm: f64) -> f64 {
    DEFAULT_CLUSTER_RTOL * (1.0 + a_norm)
}

/// Computes `δ(C; A)`.
///
/// Consecutive sorted eigenvalues of `A` that differ by at most
/// `cluster_tol` (default `1e-8·(1+‖A‖)`) form one eigenspace. Each
/// eigenspace contributes the descending spectrum of `C` compressed onto it.
pub fn delta(c: &SymMatrix, a: &SymMatrix, cluster_tol: Option<f64>) -> Result<DeltaVector> {
    check_dims(c.dim(), a.dim())?;
    let eig = eigh(a)?;
    let tol = match cluster_tol {
        None => default_cluster_tol(eig.operator_norm()),
        Some(t) if t >= 0.0 && t.is_finite() => t,
        Some(t) => {
            return Err(Error::Input(format!(
                "cluster tolerance must be finite and >= 0, got {t}"
            )))
        }
    };
    let n = a.dim();
    let rotated = c.congruence(&eig.basis);

    let mut ranges: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for j in 1..=n {
        if j == n || eig.eigenvalues[j - 1] - eig.eigenvalues[j] > tol {
            ranges.push((start, j));
            start = j;
        }
    }

    let mut values = Vec::with_capacity(n);
    let mut clusters = Vec::with_capacity(ranges.len());
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &(s, e) in &ranges {
        let m = e - s;
        let mean = eig.eigenvalues[s..e].iter().sum::<f64>() / m as f64;
        clusters.push(Cluster {
            eigenvalue_of_a: mean,
            multiplicity: m,
        });
        if m == 1 {
            values.push(rotated.get(s, s));
            columns.push(eig.basis.column(s));
            continue;
        }
        let block = SymMatrix::from_fn(m, |i, j| rotated.get(s + i, s + j));
        let inner = eigh(&block)?;
        values.extend_from_slice(&inner.eigenvalues);
        for i in 0..m {
            columns.push(
                (0..n)
                    .map(|r| {
                        (0..m)
                            .map(|j| eig.basis.get(r, s + j) * inner.basis.get(j, i))
                            .sum()
                    })
                    .collect(),
            );
        }
    }

    Ok(DeltaVector {
        values,
        clusters,
        basis_used: Dense::from_columns(&columns),
    })
}

pub fn default_fd_step(a_norm: f64, c_norm: f64) -> f64 {
    1e-6 * (1.0 + a_norm) / (1.0 + c_norm)
}

/// Finite-difference estimate of `δ(C; A)`: forward quotients of the prefix
/// eigenvalue sums of `A + tC`, first-differenced back into entries.
///
/// Only eigenvalues are used, never eigenvectors, so it is independent of
/// how [`delta`] resolves eigenspaces.
pub fn delta_fd_oracle(c: &SymMatrix, a: &SymMatrix, t: Option<f64>) -> Result<Vec<f64>> {
    check_dims(c.dim(), a.dim())?;
    let step = match t {
        Some(t) => t,
        None => default_fd_step(a.operator_norm()?, c.operator_norm()?),
    };
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Input(format!("step t must be positive, got {step}")));
    }
    let base = partial_sums(&eigenvalues(a)?);
    let moved = partial_sums(&eigenvalues(&(a + &c.scaled(step)))?);
    let quotients: Vec<f64> = moved
        .iter()
        .zip(&base)
        .map(|(m, b)| (m - b) / step)
        .collect();
    Ok(quotients
        .iter()
        .enumerate()
        .map(|(k, &q)| if k == 0 { q } else { q - quotients[k - 1] })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryItem {
    pub item: &'static str,
    /// False when the item's extra hypothesis (strict monotonicity) fails.
    pub applicable: bool,
    pub holds: bool,
    pub max_deviation: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryReport {
    pub items: Vec<CorollaryItem>,
}

impl CorollaryReport {
    pub fn all_hold(&self) -> bool {
        self.items.iter().all(|i| i.holds)
    }

    pub fn item(&self, name: &str) -> Option<&CorollaryItem> {
        self.items.iter().find(|i| i.item == name)
    }
}

fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
}

fn magnitude(vs: &[&[f64]]) -> f64 {
    vs.iter()
        .flat_map(|v| v.iter())
        .fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Equality check at `1e-9·(1 + magnitude)·dim`.
fn equality_item(item: &'static str, x: &[f64], y: &[f64]) -> CorollaryItem {
    let tol = 1e-9 * (1.0 + magnitude(&[x, y])) * x.len() as f64;
    let dev = max_abs_diff(x, y);
    CorollaryItem {
        item,
        applicable: true,
        holds: dev <= tol,
        max_deviation: dev,
        tol,
    }
}

/// Checks the four consequences of the δ construction for monotone `f`:
///
/// * (i)   `δ(f(G); G) = f(λ↓(G))`
/// * (ii)  `δ(C; G) ≺ λ(C)` (Schur, with equal traces)
/// * (iii) `δ(C; G) + a·λ↓(f(G)) = δ(C + a·f(G); G)` for `a ≥ 0`
/// * (iv)  `δ(C; f(G)) = δ(C; G)` in prefix sums, when `f` is strictly increasing
pub fn corollary_checks(
    g: &SymMatrix,
    c: &SymMatrix,
    f: &PiecewiseFn,
    a: f64,
) -> Result<CorollaryReport> {
    check_dims(g.dim(), c.dim())?;
    let class = f.classify();
    if !class.monotone_increasing {
        return Err(Error::Precondition(format!("{f} is not monotone increasing")));
    }
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::Input(format!("a must be finite and >= 0, got {a}")));
    }
    let fg = apply_fn(g, f)?;
    let lambda_g = eigenvalues(g)?;
    let delta_cg = delta(c, g, None)?;

    let f_of_lambda = lambda_g
        .iter()
        .map(|&x| f.evaluate(x))
        .collect::<Result<Vec<_>>>()?;
    let item_i = equality_item("i", &delta(&fg, g, None)?.values, &f_of_lambda);

    let schur = strong_majorize(&delta_cg.values, &eigenvalues(c)?, Tolerance::Scaled(1e-9))?;
    let item_ii = CorollaryItem {
        item: "ii",
        applicable: true,
        holds: schur.holds,
        max_deviation: (-schur.worst_margin).max(0.0),
        tol: schur.tol,
    };

    let lambda_fg = partial_sums(&eigenvalues(&fg)?);
    let shifted: Vec<f64> = delta_cg
        .partial_sums()
        .iter()
        .zip(&lambda_fg)
        .map(|(d, l)| d + a * l)
        .collect();
    let combined = delta(&(c + &fg.scaled(a)), g, None)?.partial_sums();
    let item_iii = equality_item("iii", &shifted, &combined);

    let item_iv = if class.strictly_increasing {
        equality_item("iv", &delta(c, &fg, None)?.partial_sums(), &delta_cg.partial_sums())
    } else {
        CorollaryItem {
            item: "iv",
            applicable: false,
            holds: true,
            max_deviation: 0.0,
            tol: 0.0,
        }
    };

    Ok(CorollaryReport {
        items: vec![item_i, item_ii, item_iii, item_iv],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridVerdict {
    pub a: f64,
    pub report: MajReport,
}

/// The three conditions of the equivalence, evaluated on a finite grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop4bReport {
    /// `λ(aA + B) ≺_w λ(aA + C)` per grid value.
    pub pp1: Vec<GridVerdict>,
    pub pp1_holds: bool,
    /// `δ(B; G) ≺_dw δ(C; G)`.
    pub pp2: MajReport,
    pub pp2_holds: bool,
    /// `δ(aA + B; G) ≺_dw δ(aA + C; G)` per grid value.
    pub pp3: Vec<GridVerdict>,
    pub pp3_holds: bool,
    /// All three agree. A fail of (pp2) with (pp1) holding on the grid means
    /// the grid did not reach large enough `a`.
    pub consistent: bool,
}

/// Evaluates the equivalence for `A = f1(G)`, `B = f2(G)` and a given `C`.
pub fn check_prop4b(
    g: &SymMatrix,
    c: &SymMatrix,
    f1: &PiecewiseFn,
    f2: &PiecewiseFn,
    a_grid: &[f64],
    tol: Tolerance,
) -> Result<Prop4bReport> {
    check_dims(g.dim(), c.dim())?;
    for f in [f1, f2] {
        if !f.classify().monotone_increasing {
            return Err(Error::Precondition(format!("{f} is not monotone increasing")));
        }
    }
    if a_grid.is_empty() {
        return Err(Error::Input("a grid must not be empty".into()));
    }
    if let Some(bad) = a_grid.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return Err(Error::Input(format!("grid values must be >= 0, got {bad}")));
    }
    let big_a = apply_fn(g, f1)?;
    let b = apply_fn(g, f2)?;

    let mut pp1 = Vec::with_capacity(a_grid.len());
    let mut pp3 = Vec::with_capacity(a_grid.len());
    for &a in a_grid {
        let left = &big_a.scaled(a) + &b;
        let right = &big_a.scaled(a) + c;
        pp1.push(GridVerdict {
            a,
            report: weak_majorize(&eigenvalues(&left)?, &eigenvalues(&right)?, tol)?,
        });
        pp3.push(GridVerdict {
            a,
            report: dominated_weak_majorize(
                &delta(&left, g, None)?.values,
                &delta(&right, g, None)?.values,
                tol,
            )?,
        });
    }
    let pp2 = dominated_weak_majorize(&delta(&b, g, None)?.values, &delta(c, g, None)?.values, tol)?;

    let pp1_holds = pp1.iter().all(|v| v.report.holds);
    let pp3_holds = pp3.iter().all(|v| v.report.holds);
    let pp2_holds = pp2.holds;
    Ok(Prop4bReport {
        pp1,
        pp1_holds,
        pp2,
        pp2_holds,
        pp3,
        pp3_holds,
        consistent: pp1_holds == pp2_holds && pp2_holds == pp3_holds,
    })
}
