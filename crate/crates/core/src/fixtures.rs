//! The three published counterexamples, embedded at their printed precision,
//! and a reproduction routine that recomputes every printed number.

use serde::Serialize;

use crate::delta::delta;
use crate::error::Result;
use crate::inequality_lab::{check, CheckResult, InequalityId, Verdict};
use crate::majorization::{operator_norm, Tolerance};
use crate::scalar_fn::PiecewiseFn;
use crate::spectral::{abs_matrix, apply_fn, eigenvalues, positive_part, SymMatrix};

/// Printed values carry five significant figures.
pub const PRINTED_TOL: f64 = 5e-5;
/// The zero vector of the ordered-convex fixture is exact.
pub const EXACT_ZERO_TOL: f64 = 1e-10;

fn m(rows: &[&[f64]]) -> SymMatrix {
    SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
        .expect("fixture matrices are symmetric")
}

/// `g(x) = x + (x − 1)⁺`.
pub fn q1_function() -> PiecewiseFn {
    PiecewiseFn::angle(1.0, &[(1.0, 1.0)]).expect("valid")
}

/// 2×2 pair `(A, B)` violating the convex difference inequality.
pub fn q1_matrices() -> (SymMatrix, SymMatrix) {
    (
        m(&[&[0.9, 0.0], &[0.0, 0.6]]),
        m(&[&[0.8, 0.5], &[0.5, 0.4]]),
    )
}

/// `f(x) = min(x, 1)`.
pub fn q3_function() -> PiecewiseFn {
    PiecewiseFn::min1()
}

/// 3×3 pair `(B, Δ)` violating the ordered concave difference inequality.
pub fn q3_matrices() -> (SymMatrix, SymMatrix) {
    (
        m(&[
            &[0.701816, 0.317887, 0.198910],
            &[0.317887, 1.014950, -0.093826],
            &[0.198910, -0.093826, 0.274236],
        ]),
        SymMatrix::diag(&[0.192713, 0.446505, 0.455416]),
    )
}

/// `f(x) = (x − 1)⁺`.
pub fn q2_function() -> PiecewiseFn {
    PiecewiseFn::angle(0.0, &[(1.0, 1.0)]).expect("valid")
}

/// 3×3 pair `(X, Y)` with diagonal `Y` for the ordered convex question.
pub fn q2_matrices() -> (SymMatrix, SymMatrix) {
    (
        m(&[
            &[0.35614, -0.053243, 0.10116],
            &[-0.053243, 0.87456, 0.40559],
            &[0.10116, 0.40559, 0.82474],
        ]),
        SymMatrix::diag(&[0.53642, 0.42018, 0.094866]),
    )
}

/// `(X + Y − 𝟙)⁺ − (X − 𝟙)⁺`.
pub fn q2_difference(x: &SymMatrix, y: &SymMatrix) -> Result<SymMatrix> {
    let id = SymMatrix::identity(x.dim());
    Ok(&positive_part(&(&(x + y) - &id))? - &positive_part(&(x - &id))?)
}

/// Slope used to turn the reduced witness into a direct norm witness:
/// `g(x) = 10·x + (x − 1)⁺` violates the ordered convex inequality on `(X, Y)`.
pub const Q2_NORM_WITNESS_SLOPE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub quantity: String,
    pub expected: f64,
    pub computed: f64,
    pub tolerance: f64,
    pub ok: bool,
}

impl Comparison {
    fn new(quantity: impl Into<String>, expected: f64, computed: f64, tolerance: f64) -> Self {
        Self {
            quantity: quantity.into(),
            expected,
            computed,
            tolerance,
            ok: (expected - computed).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureOutcome {
    pub name: &'static str,
    pub comparisons: Vec<Comparison>,
    /// Checker runs that must all come out violated; the first is the primary one.
    pub checks: Vec<CheckResult>,
    pub reproduced: bool,
}

impl FixtureOutcome {
    fn finish(name: &'static str, comparisons: Vec<Comparison>, checks: Vec<CheckResult>) -> Self {
        let reproduced = comparisons.iter().all(|c| c.ok)
            && checks.iter().all(|c| c.verdict == Verdict::Violated);
        Self {
            name,
            comparisons,
            checks,
            reproduced,
        }
    }

    /// Human-readable list of mismatches, empty when reproduced.
    pub fn diff(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .comparisons
            .iter()
            .filter(|c| !c.ok)
            .map(|c| {
                format!(
                    "{}: expected {} computed {} (|diff| {:.3e} > {:.1e})",
                    c.quantity,
                    c.expected,
                    c.computed,
                    (c.expected - c.computed).abs(),
                    c.tolerance
                )
            })
            .collect();
        for c in &self.checks {
            if c.verdict != Verdict::Violated {
                out.push(format!("{}: verdict {:?}, expected Violated", c.inequality, c.verdict));
            }
        }
        out
    }
}

fn compare_vec(label: &str, expected: &[f64], computed: &[f64], tol: f64) -> Vec<Comparison> {
    expected
        .iter()
        .zip(computed)
        .enumerate()
        .map(|(i, (&e, &c))| Comparison::new(format!("{label}[{}]", i + 1), e, c, tol))
        .collect()
}

pub fn verify_q1() -> Result<FixtureOutcome> {
    let g = q1_function();
    let (a, b) = q1_matrices();
    let rhs = apply_fn(&abs_matrix(&(&a - &b))?, &g)?;
    let lhs = &apply_fn(&a, &g)? - &apply_fn(&b, &g)?;
    let mut comparisons = compare_vec("eig g(|A-B|)", &[0.65249, 0.35249], &eigenvalues(&rhs)?, PRINTED_TOL);
    comparisons.extend(compare_vec(
        "eig g(A)-g(B)",
        &[0.65010, -0.48862],
        &eigenvalues(&lhs)?,
        PRINTED_TOL,
    ));
    comparisons.push(Comparison::new("||g(|A-B|)||", 0.65249, operator_norm(&rhs)?, PRINTED_TOL));
    comparisons.push(Comparison::new("||g(A)-g(B)||", 0.65010, operator_norm(&lhs)?, PRINTED_TOL));
    let result = check(InequalityId::Q1DiffConvex, &g, &[a, b], Tolerance::Auto)?;
    Ok(FixtureOutcome::finish("question-1 (2x2, convex angle function)", comparisons, vec![result]))
}

pub fn verify_q3() -> Result<FixtureOutcome> {
    let f = q3_function();
    let (b, d) = q3_matrices();
    let rhs = apply_fn(&d, &f)?;
    let lhs = &apply_fn(&(&b + &d), &f)? - &apply_fn(&b, &f)?;
    let comparisons = vec![
        Comparison::new("||f(Delta)||", 0.455416, operator_norm(&rhs)?, PRINTED_TOL),
        Comparison::new("||f(B+Delta)-f(B)||", 0.455776, operator_norm(&lhs)?, PRINTED_TOL),
    ];
    let result = check(InequalityId::Q3DiffConcaveOrdered, &f, &[b, d], Tolerance::Auto)?;
    Ok(FixtureOutcome::finish("question-3 (3x3, min(x,1))", comparisons, vec![result]))
}

pub fn verify_q2() -> Result<FixtureOutcome> {
    let f = q2_function();
    let (x, y) = q2_matrices();
    let id = SymMatrix::identity(3);
    let c = q2_difference(&x, &y)?;
    let lhs = delta(&positive_part(&(&y - &id))?, &y, None)?;
    let rhs = delta(&c, &y, None)?;

    let mut comparisons = compare_vec("delta((Y-1)+;Y)", &[0.0; 3], &lhs.values, EXACT_ZERO_TOL);
    comparisons.extend(compare_vec(
        "delta((X+Y-1)+ - (X-1)+;Y)",
        &[-0.00018194, 0.2573, 0.04],
        &rhs.values,
        PRINTED_TOL,
    ));
    let printed = [
        [-0.00018194, 0.00052449, -0.0016345],
        [0.00052449, 0.2573, 0.12368],
        [-0.0016345, 0.12368, 0.04],
    ];
    for i in 0..3 {
        for j in i..3 {
            comparisons.push(Comparison::new(
                format!("(X+Y-1)+ - (X-1)+ [{},{}]", i + 1, j + 1),
                printed[i][j],
                c.get(i, j),
                PRINTED_TOL,
            ));
        }
    }

    let reduced = check(InequalityId::Q2DeltaReduced, &f, &[x.clone(), y.clone()], Tolerance::Auto)?;
    let k1 = reduced.report.as_ref().is_some_and(|r| r.worst_k == 1);
    comparisons.push(Comparison::new(
        "first violated prefix k",
        1.0,
        if k1 { 1.0 } else { 0.0 },
        0.0,
    ));
    let witness_fn = PiecewiseFn::angle(Q2_NORM_WITNESS_SLOPE, &[(1.0, 1.0)])?;
    let witness = check(InequalityId::Q2DiffConvexOrdered, &witness_fn, &[x, y], Tolerance::Auto)?;
    Ok(FixtureOutcome::finish(
        "question-2 (3x3, dominated majorisation reduction)",
        comparisons,
        vec![reduced, witness],
    ))
}

/// Recomputes all three counterexamples.
pub fn verify_paper_fixtures() -> Result<Vec<FixtureOutcome>> {
    Ok(vec![verify_q1()?, verify_q3()?, verify_q2()?])
}
