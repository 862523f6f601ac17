//! Vector order relations (weak, dominated-weak and strong majorisation,
//! entrywise dominance) and the Ky Fan family of unitarily invariant norms.

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::spectral::{eigenvalues, SymMatrix};

/// Relative cushion used when a caller does not pick a tolerance.
pub const DEFAULT_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    WeakMajorize,
    DominatedWeak,
    StrongMajorize,
    EntrywiseGe,
}

/// How the acceptance cushion of a verdict is chosen.
///
/// Scaled tolerances are relative to `1 + max |partial sum|` over both sides.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    #[default]
    Auto,
    Scaled(f64),
    Absolute(f64),
}

impl Tolerance {
    pub fn resolve(self, magnitude: f64) -> f64 {
        match self {
            Tolerance::Auto => DEFAULT_RTOL * (1.0 + magnitude),
            Tolerance::Scaled(r) => r * (1.0 + magnitude),
            Tolerance::Absolute(t) => t,
        }
    }
}

/// Outcome of comparing two vectors under one of the [`Relation`]s.
///
/// `worst_margin` is the smallest `rhs − lhs` over all `k` (negative means
/// violated) and `worst_k` is its 1-based index. For
/// [`Relation::EntrywiseGe`] the "partial sums" are the entries themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajReport {
    pub relation: Relation,
    pub lhs_partial_sums: Vec<f64>,
    pub rhs_partial_sums: Vec<f64>,
    pub holds: bool,
    pub worst_margin: f64,
    pub worst_k: usize,
    pub tol: f64,
}

fn sorted_desc(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn partial_sums(x: &[f64]) -> Vec<f64> {
    x.iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

fn validate(x: &[f64], y: &[f64]) -> Result<()> {
    check_dims(x.len(), y.len())?;
    if x.is_empty() {
        return Err(Error::Input("cannot compare empty vectors".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Input("vectors contain non-finite values".into()));
    }
    Ok(())
}

fn compare(relation: Relation, lhs: Vec<f64>, rhs: Vec<f64>, tol: Tolerance) -> MajReport {
    let magnitude = lhs.iter().chain(&rhs).fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = tol.resolve(magnitude);
    let (worst_k, worst_margin) = lhs
        .iter()
        .zip(&rhs)
        .map(|(l, r)| r - l)
        .enumerate()
        .fold((0, f64::INFINITY), |best, (k, m)| {
            if m < best.1 {
                (k + 1, m)
            } else {
                best
            }
        });
    MajReport {
        relation,
        lhs_partial_sums: lhs,
        rhs_partial_sums: rhs,
        holds: worst_margin >= -tol,
        worst_margin,
        worst_k,
        tol,
    }
}

/// `x ≺_w y`: prefix sums of `x↓` never exceed those of `y↓`.
pub fn weak_majorize(x: &[f64], y: &[f64], tol: Tolerance) -> Result<MajReport> {
    validate(x, y)?;
    Ok(compare(
        Relation::WeakMajorize,
        partial_sums(&sorted_desc(x)),
        partial_sums(&sorted_desc(y)),
        tol,
    ))
}

/// `x ≺_dw y`: prefix sums compared in the given order, no sorting.
pub fn dominated_weak_majorize(x: &[f64], y: &[f64], tol: Tolerance) -> Result<MajReport> {
    validate(x, y)?;
    Ok(compare(
        Relation::DominatedWeak,
        partial_sums(x),
        partial_sums(y),
        tol,
    ))
}

/// `x ≺ y`: weak majorisation plus equal totals. A total mismatch enters
/// the margin as `−|Σx − Σy|` at `k = n`.
pub fn strong_majorize(x: &[f64], y: &[f64], tol: Tolerance) -> Result<MajReport> {
    let mut report = weak_majorize(x, y, tol)?;
    report.relation = Relation::StrongMajorize;
    let n = x.len();
    let gap = -(report.lhs_partial_sums[n - 1] - report.rhs_partial_sums[n - 1]).abs();
    if gap < report.worst_margin {
        report.worst_margin = gap;
        report.worst_k = n;
    }
    report.holds = report.worst_margin >= -report.tol;
    Ok(report)
}

/// `x_k ≤ y_k` for every `k`, in the given order.
pub fn entrywise_le(x: &[f64], y: &[f64], tol: Tolerance) -> Result<MajReport> {
    validate(x, y)?;
    Ok(compare(Relation::EntrywiseGe, x.to_vec(), y.to_vec(), tol))
}

/// Singular values of a symmetric matrix (`|λ|`, sorted non-increasing).
pub fn singular_values(a: &SymMatrix) -> Result<Vec<f64>> {
    let abs: Vec<f64> = eigenvalues(a)?.iter().map(|l| l.abs()).collect();
    Ok(sorted_desc(&abs))
}

/// Sum of the `k` largest singular values.
pub fn ky_fan_norm(a: &SymMatrix, k: usize) -> Result<f64> {
    if k < 1 || k > a.dim() {
        return Err(Error::Input(format!(
            "Ky Fan index k = {k} outside 1..={}",
            a.dim()
        )));
    }
    Ok(singular_values(a)?[..k].iter().sum())
}

pub fn operator_norm(a: &SymMatrix) -> Result<f64> {
    ky_fan_norm(a, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random_sym;
    use proptest::prelude::*;

    const T0: Tolerance = Tolerance::Absolute(0.0);

    #[test]
    fn weak_examples() {
        let r = weak_majorize(&[1.0, 1.0], &[2.0, 0.0], T0).unwrap();
        assert!(r.holds);
        assert_eq!(r.lhs_partial_sums, vec![1.0, 2.0]);
        assert_eq!(r.rhs_partial_sums, vec![2.0, 2.0]);
        let r = weak_majorize(&[3.0, 0.0], &[2.0, 2.0], T0).unwrap();
        assert!(!r.holds);
        assert_eq!(r.worst_k, 1);
        assert_eq!(r.worst_margin, -1.0);
    }

    #[test]
    fn dominated_examples() {
        let r = dominated_weak_majorize(&[0.0; 3], &[-0.00018194, 0.2573, 0.04], T0).unwrap();
        assert!(!r.holds);
        assert_eq!(r.worst_k, 1);
        let x = [0.3, -1.0, 2.0];
        let r = dominated_weak_majorize(&x, &x, T0).unwrap();
        assert!(r.holds);
        assert_eq!(r.worst_margin, 0.0);
        let y = [1.3, -1.0, 2.0];
        assert!(dominated_weak_majorize(&x, &y, T0).unwrap().holds);
    }

    #[test]
    fn dominated_is_not_weak() {
        // order matters for ≺_dw but not for ≺_w
        assert!(!dominated_weak_majorize(&[1.0, 0.0], &[0.0, 1.0], T0).unwrap().holds);
        assert!(weak_majorize(&[1.0, 0.0], &[0.0, 1.0], T0).unwrap().holds);
        assert!(dominated_weak_majorize(&[0.0, 1.0], &[1.0, 0.0], T0).unwrap().holds);
    }

    #[test]
    fn strong_examples() {
        assert!(!strong_majorize(&[1.0, 1.0], &[2.0, 1.0], T0).unwrap().holds);
        let r = strong_majorize(&[1.0, 1.0], &[2.0, 1.0], T0).unwrap();
        assert_eq!(r.worst_k, 2);
        assert!(strong_majorize(&[3.0, 1.0, 2.0], &[1.0, 2.0, 3.0], T0).unwrap().holds);
        assert!(strong_majorize(&[1.0, 1.0], &[2.0, 0.0], T0).unwrap().holds);
    }

    #[test]
    fn schur_diagonal_vs_spectrum() {
        for seed in 0..50 {
            let c = random_sym(4, seed, 2.0).unwrap();
            let r = strong_majorize(&c.diagonal(), &eigenvalues(&c).unwrap(), Tolerance::Auto)
                .unwrap();
            assert!(r.holds, "seed {seed}: {r:?}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            weak_majorize(&[1.0], &[1.0, 2.0], T0),
            Err(Error::DimMismatch { .. })
        ));
        assert!(weak_majorize(&[], &[], T0).is_err());
        let a = SymMatrix::diag(&[3.0, 1.0, 2.0]);
        assert!(ky_fan_norm(&a, 0).is_err());
        assert!(ky_fan_norm(&a, 4).is_err());
    }

    #[test]
    fn ky_fan_examples() {
        let a = SymMatrix::diag(&[3.0, 1.0, 2.0]);
        assert_eq!(ky_fan_norm(&a, 2).unwrap(), 5.0);
        let b = SymMatrix::diag(&[-4.0, 1.0, 2.0]);
        assert_eq!(operator_norm(&b).unwrap(), 4.0);
        assert_eq!(ky_fan_norm(&b, 3).unwrap(), 7.0);
    }

    #[test]
    fn tolerance_resolution() {
        assert_eq!(Tolerance::Absolute(0.5).resolve(100.0), 0.5);
        assert_eq!(Tolerance::Scaled(1e-8).resolve(1.0), 2e-8);
        assert_eq!(Tolerance::Auto.resolve(0.0), DEFAULT_RTOL);
    }

    #[test]
    fn report_serialises_with_spec_fields() {
        let r = weak_majorize(&[1.0, 1.0], &[2.0, 0.0], T0).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["relation", "lhs_partial_sums", "rhs_partial_sums", "holds", "worst_margin", "worst_k"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["relation"], "weak_majorize");
    }

    fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..7).prop_flat_map(|n| {
            (
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn ky_fan_dominance_agrees_with_weak_majorisation(s1 in 0u64..10_000, s2 in 0u64..10_000, dim in 1usize..6) {
            let a = random_sym(dim, s1, 1.0).unwrap();
            let b = random_sym(dim, s2, 1.2).unwrap();
            let by_norms = (1..=dim).all(|k| ky_fan_norm(&a, k).unwrap() <= ky_fan_norm(&b, k).unwrap());
            let by_vectors = weak_majorize(&singular_values(&a).unwrap(), &singular_values(&b).unwrap(), T0).unwrap();
            prop_assert_eq!(by_norms, by_vectors.holds);
        }

        #[test]
        fn appending_a_common_minimum_keeps_the_verdict((x, y) in vec_pair()) {
            let before = weak_majorize(&x, &y, T0).unwrap().holds;
            let floor = x.iter().chain(&y).cloned().fold(f64::INFINITY, f64::min) - 1.0;
            let mut x2 = x.clone();
            let mut y2 = y.clone();
            x2.push(floor);
            y2.push(floor);
            prop_assert_eq!(before, weak_majorize(&x2, &y2, T0).unwrap().holds);
        }

        #[test]
        fn weak_verdict_ignores_order((x, y) in vec_pair()) {
            let mut xr = x.clone();
            xr.reverse();
            prop_assert_eq!(
                weak_majorize(&x, &y, T0).unwrap().holds,
                weak_majorize(&xr, &y, T0).unwrap().holds
            );
        }

        #[test]
        fn holds_matches_margin((x, y) in vec_pair(), tol in 0.0f64..0.5) {
            for r in [
                weak_majorize(&x, &y, Tolerance::Absolute(tol)).unwrap(),
                dominated_weak_majorize(&x, &y, Tolerance::Absolute(tol)).unwrap(),
                strong_majorize(&x, &y, Tolerance::Absolute(tol)).unwrap(),
                entrywise_le(&x, &y, Tolerance::Absolute(tol)).unwrap(),
            ] {
                prop_assert_eq!(r.holds, r.worst_margin >= -tol);
                let m = r.rhs_partial_sums[r.worst_k - 1] - r.lhs_partial_sums[r.worst_k - 1];
                if r.relation != Relation::StrongMajorize {
                    prop_assert_eq!(m, r.worst_margin);
                }
            }
        }
    }
}
