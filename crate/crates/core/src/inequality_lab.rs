//! One checker per inequality.
//!
//! Norm inequalities `|||X||| ≤ |||Y|||` over every unitarily invariant norm
//! are checked as `σ(X) ≺_w σ(Y)` (Ky Fan dominance), never by sampling a
//! few named norms. Function-class and matrix preconditions are checked and
//! reported; a failed precondition is a verdict, not an error.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::delta::delta;
use crate::error::{check_dims, Error, Result};
use crate::majorization::{
    dominated_weak_majorize, entrywise_le, singular_values, weak_majorize, MajReport, Relation,
    Tolerance,
};
use crate::scalar_fn::{FnClass, PiecewiseFn};
use crate::spectral::{abs_matrix, apply_fn, eigenvalues, min_eigenvalue, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityId {
    /// `|||f(A) − f(B)||| ≤ |||f(|A − B|)|||`, `f` operator monotone.
    AndoDiffMonotone,
    /// `|||g(A) − g(B)||| ≥ |||g(|A − B|)|||`, `g` the inverse of such an `f`.
    AndoDiffInverse,
    /// `|||f(A) + f(B)||| ≥ |||f(A + B)|||`, `f ≥ 0` concave.
    AndozhanSumConcave,
    /// `|||g(A) + g(B)||| ≤ |||g(A + B)|||`, `g ≥ 0` convex, `g(0) = 0`.
    AndozhanSumConvex,
    /// `|||g(A) − g(B)||| ≥ |||g(|A − B|)|||` for convex `g` (false in general).
    Q1DiffConvex,
    /// `|||g(B + Δ) − g(B)||| ≥ |||g(Δ)|||` for convex `g` (false in general).
    Q2DiffConvexOrdered,
    /// `|||f(B + Δ) − f(B)||| ≤ |||f(Δ)|||` for concave `f` (false in general).
    Q3DiffConcaveOrdered,
    /// `δ(f(Y); Y) ≺_dw δ(f(X + Y) − f(X); Y)`: the reduced form of the
    /// ordered convex question, equivalent to it over the family `a·x + f(x)`.
    Q2DeltaReduced,
    /// `λ↓(g(A) − g(B)) ≤ λ↓(g(A − B))` entrywise when `A ≥ ‖B‖`, `g` concave.
    PropGgcEntrywise,
    /// `λ↓(f(A − B)) ≤ λ↓(f(A) − f(B))` entrywise when `A ≥ ‖B‖`, `f` convex.
    CorGgEntrywise,
    /// `λ(g_a(Y)) ≺_w λ(g_a(X + Y) − g_a(X))`.
    PropG,
    /// `δ(g_a(Y); Y) ≺_dw δ(g_a(X + Y) − g_a(X); Y)`.
    #[serde(rename = "prop_4")]
    Prop4,
    /// `δ(f(A + B); A + B) ≺_dw δ(f(A) + f(B); A + B)` for concave `f ≥ 0`,
    /// reversed for convex `g ≥ 0` with `g(0) = 0`.
    BourinsStrengthened,
}

/// Which class of scalar function a checker needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FnRequirement {
    /// Non-negative, increasing, concave. For the operator-monotone tags
    /// this is the checkable necessary part of operator monotonicity.
    ConcaveIncreasing,
    /// Non-negative, increasing, convex, vanishing at zero.
    ConvexIncreasingZero,
    /// The family `g_a(x) = a·x + x²/(x + 1)`.
    GaFamily,
    /// Either of the first two.
    ConcaveOrConvex,
}

/// Static facts about a checker: input names, function class, whether the
/// bounded condition `A ≥ ‖B‖·𝟙` is required, and the relation it tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TagSpec {
    pub inputs: [&'static str; 2],
    pub function: FnRequirement,
    pub bounded: bool,
    pub relation: Relation,
}

impl InequalityId {
    pub const ALL: [InequalityId; 13] = [
        Self::AndoDiffMonotone,
        Self::AndoDiffInverse,
        Self::AndozhanSumConcave,
        Self::AndozhanSumConvex,
        Self::Q1DiffConvex,
        Self::Q2DiffConvexOrdered,
        Self::Q3DiffConcaveOrdered,
        Self::Q2DeltaReduced,
        Self::PropGgcEntrywise,
        Self::CorGgEntrywise,
        Self::PropG,
        Self::Prop4,
        Self::BourinsStrengthened,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Self::AndoDiffMonotone => "ando_diff_monotone",
            Self::AndoDiffInverse => "ando_diff_inverse",
            Self::AndozhanSumConcave => "andozhan_sum_concave",
            Self::AndozhanSumConvex => "andozhan_sum_convex",
            Self::Q1DiffConvex => "q1_diff_convex",
            Self::Q2DiffConvexOrdered => "q2_diff_convex_ordered",
            Self::Q3DiffConcaveOrdered => "q3_diff_concave_ordered",
            Self::Q2DeltaReduced => "q2_delta_reduced",
            Self::PropGgcEntrywise => "prop_ggc_entrywise",
            Self::CorGgEntrywise => "cor_gg_entrywise",
            Self::PropG => "prop_g",
            Self::Prop4 => "prop_4",
            Self::BourinsStrengthened => "bourins_strengthened",
        }
    }

    pub fn spec(self) -> TagSpec {
        use FnRequirement::*;
        use Relation::*;
        let (inputs, function, bounded, relation) = match self {
            Self::AndoDiffMonotone => (["A", "B"], ConcaveIncreasing, false, WeakMajorize),
            Self::AndoDiffInverse => (["A", "B"], ConvexIncreasingZero, false, WeakMajorize),
            Self::AndozhanSumConcave => (["A", "B"], ConcaveIncreasing, false, WeakMajorize),
            Self::AndozhanSumConvex => (["A", "B"], ConvexIncreasingZero, false, WeakMajorize),
            Self::Q1DiffConvex => (["A", "B"], ConvexIncreasingZero, false, WeakMajorize),
            Self::Q2DiffConvexOrdered => (["B", "Delta"], ConvexIncreasingZero, false, WeakMajorize),
            Self::Q3DiffConcaveOrdered => (["B", "Delta"], ConcaveIncreasing, false, WeakMajorize),
            Self::Q2DeltaReduced => (["X", "Y"], ConvexIncreasingZero, false, DominatedWeak),
            Self::PropGgcEntrywise => (["A", "B"], ConcaveIncreasing, true, EntrywiseGe),
            Self::CorGgEntrywise => (["A", "B"], ConvexIncreasingZero, true, EntrywiseGe),
            Self::PropG => (["X", "Y"], GaFamily, false, WeakMajorize),
            Self::Prop4 => (["X", "Y"], GaFamily, false, DominatedWeak),
            Self::BourinsStrengthened => (["A", "B"], ConcaveOrConvex, false, DominatedWeak),
        };
        TagSpec {
            inputs,
            function,
            bounded,
            relation,
        }
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for InequalityId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|id| id.tag() == s)
            .ok_or_else(|| Error::Input(format!("unknown inequality tag `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precondition {
    pub name: String,
    pub met: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    PreconditionFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub inequality: InequalityId,
    pub function: PiecewiseFn,
    pub preconditions: Vec<Precondition>,
    /// Absent when a precondition failed.
    pub report: Option<MajReport>,
    pub verdict: Verdict,
    /// Which direction was tested, for tags that have two.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    pub fn margin(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.worst_margin)
    }
}

fn pre(name: impl Into<String>, met: bool) -> Precondition {
    Precondition {
        name: name.into(),
        met,
    }
}

fn concave_ok(c: &FnClass) -> bool {
    c.concave && c.monotone_increasing && c.nonnegative_on_r_plus
}

fn convex_ok(c: &FnClass) -> bool {
    c.convex && c.monotone_increasing && c.nonnegative_on_r_plus && c.zero_at_zero
}

fn fn_preconditions(req: FnRequirement, f: &PiecewiseFn) -> Vec<Precondition> {
    let c = f.classify();
    match req {
        FnRequirement::ConcaveIncreasing => vec![
            pre("f monotone increasing", c.monotone_increasing),
            pre("f concave", c.concave),
            pre("f nonnegative on [0,inf)", c.nonnegative_on_r_plus),
        ],
        FnRequirement::ConvexIncreasingZero => vec![
            pre("f monotone increasing", c.monotone_increasing),
            pre("f convex", c.convex),
            pre("f nonnegative on [0,inf)", c.nonnegative_on_r_plus),
            pre("f(0) = 0", c.zero_at_zero),
        ],
        FnRequirement::GaFamily => vec![pre("f is ga:a=<a>, a >= 0", f.ga_parameter().is_some())],
        FnRequirement::ConcaveOrConvex => vec![pre(
            "f nonnegative increasing concave, or nonnegative increasing convex with f(0) = 0",
            concave_ok(&c) || convex_ok(&c),
        )],
    }
}

/// Whether `f` belongs to the function class the checker needs.
pub fn function_meets(id: InequalityId, f: &PiecewiseFn) -> bool {
    fn_preconditions(id.spec().function, f).iter().all(|p| p.met)
}

/// Absolute PSD cushion for a matrix of this size.
pub fn psd_tol(m: &SymMatrix) -> Result<f64> {
    Ok(1e-10 * (1.0 + m.operator_norm()?))
}

fn matrix_preconditions(
    spec: &TagSpec,
    first: &SymMatrix,
    second: &SymMatrix,
) -> Result<Vec<Precondition>> {
    let mut out = Vec::new();
    for (name, m) in spec.inputs.iter().zip([first, second]) {
        out.push(pre(format!("{name} >= 0"), min_eigenvalue(m)? >= -psd_tol(m)?));
    }
    if spec.bounded {
        let b_norm = second.operator_norm()?;
        out.push(pre(
            "A >= ||B|| I",
            min_eigenvalue(first)? >= b_norm - psd_tol(first)?,
        ));
    }
    Ok(out)
}

fn sigma(m: &SymMatrix) -> Result<Vec<f64>> {
    singular_values(m)
}

/// Runs one checker.
///
/// Errors only on malformed input (wrong count, mismatched dimensions,
/// numerically undefined function values). Unmet preconditions yield
/// [`Verdict::PreconditionFailed`].
pub fn check(
    id: InequalityId,
    f: &PiecewiseFn,
    inputs: &[SymMatrix],
    tol: Tolerance,
) -> Result<CheckResult> {
    let [first, second] = inputs else {
        return Err(Error::Input(format!(
            "{id} takes exactly 2 matrices, got {}",
            inputs.len()
        )));
    };
    check_dims(first.dim(), second.dim())?;
    let spec = id.spec();
    let mut preconditions = fn_preconditions(spec.function, f);
    preconditions.extend(matrix_preconditions(&spec, first, second)?);
    if preconditions.iter().any(|p| !p.met) {
        return Ok(CheckResult {
            inequality: id,
            function: f.clone(),
            preconditions,
            report: None,
            verdict: Verdict::PreconditionFailed,
            note: None,
        });
    }

    let fx = |m: &SymMatrix| apply_fn(m, f);
    let mut note = None;
    let report = match id {
        InequalityId::AndoDiffMonotone => {
            let (a, b) = (first, second);
            weak_majorize(&sigma(&(&fx(a)? - &fx(b)?))?, &sigma(&fx(&abs_matrix(&(a - b))?)?)?, tol)?
        }
        InequalityId::AndoDiffInverse | InequalityId::Q1DiffConvex => {
            let (a, b) = (first, second);
            weak_majorize(&sigma(&fx(&abs_matrix(&(a - b))?)?)?, &sigma(&(&fx(a)? - &fx(b)?))?, tol)?
        }
        InequalityId::AndozhanSumConcave => {
            let (a, b) = (first, second);
            weak_majorize(&sigma(&fx(&(a + b))?)?, &sigma(&(&fx(a)? + &fx(b)?))?, tol)?
        }
        InequalityId::AndozhanSumConvex => {
            let (a, b) = (first, second);
            weak_majorize(&sigma(&(&fx(a)? + &fx(b)?))?, &sigma(&fx(&(a + b))?)?, tol)?
        }
        InequalityId::Q2DiffConvexOrdered => {
            let (b, d) = (first, second);
            weak_majorize(&sigma(&fx(d)?)?, &sigma(&(&fx(&(b + d))? - &fx(b)?))?, tol)?
        }
        InequalityId::Q3DiffConcaveOrdered => {
            let (b, d) = (first, second);
            weak_majorize(&sigma(&(&fx(&(b + d))? - &fx(b)?))?, &sigma(&fx(d)?)?, tol)?
        }
        InequalityId::PropGgcEntrywise => {
            let (a, b) = (first, second);
            entrywise_le(
                &eigenvalues(&(&fx(a)? - &fx(b)?))?,
                &eigenvalues(&fx(&(a - b))?)?,
                tol,
            )?
        }
        InequalityId::CorGgEntrywise => {
            let (a, b) = (first, second);
            entrywise_le(
                &eigenvalues(&fx(&(a - b))?)?,
                &eigenvalues(&(&fx(a)? - &fx(b)?))?,
                tol,
            )?
        }
        InequalityId::PropG => {
            let (x, y) = (first, second);
            weak_majorize(
                &eigenvalues(&fx(y)?)?,
                &eigenvalues(&(&fx(&(x + y))? - &fx(x)?))?,
                tol,
            )?
        }
        InequalityId::Prop4 | InequalityId::Q2DeltaReduced => {
            let (x, y) = (first, second);
            dominated_weak_majorize(
                &delta(&fx(y)?, y, None)?.values,
                &delta(&(&fx(&(x + y))? - &fx(x)?), y, None)?.values,
                tol,
            )?
        }
        InequalityId::BourinsStrengthened => {
            let (a, b) = (first, second);
            let g = a + b;
            let whole = delta(&fx(&g)?, &g, None)?.values;
            let parts = delta(&(&fx(a)? + &fx(b)?), &g, None)?.values;
            if concave_ok(&f.classify()) {
                note = Some("concave: delta(f(A+B)) <_dw delta(f(A)+f(B))".into());
                dominated_weak_majorize(&whole, &parts, tol)?
            } else {
                note = Some("convex: delta(f(A)+f(B)) <_dw delta(f(A+B))".into());
                dominated_weak_majorize(&parts, &whole, tol)?
            }
        }
    };

    let verdict = if report.holds {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    Ok(CheckResult {
        inequality: id,
        function: f.clone(),
        preconditions,
        report: Some(report),
        verdict,
        note,
    })
}
