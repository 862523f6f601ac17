//! Seeded random search for violations, plus a coordinate-descent shrinker
//! that pushes a found violation's margin further negative.
//!
//! Trial `i` draws from its own ChaCha stream `(seed, i)`, so trials are
//! independent of execution order and run in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inequality_lab::{
    check, function_meets, psd_tol, CheckResult, FnRequirement, InequalityId, Verdict,
};
use crate::majorization::Tolerance;
use crate::scalar_fn::{Kink, PiecewiseFn};
use crate::spectral::{min_eigenvalue, positive_part, sample_psd, SymMatrix};

/// Structure imposed on sampled inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    None,
    /// `A = B + Δ` with `Δ ≥ 0` (for `(A, B)` checkers).
    Ordered,
    /// `A = ‖B‖·𝟙 + P` with `P ≥ 0`.
    Bounded,
}

impl Constraint {
    pub fn default_for(id: InequalityId) -> Self {
        if id.spec().bounded {
            Constraint::Bounded
        } else {
            Constraint::None
        }
    }

    fn allowed_for(self, id: InequalityId) -> bool {
        let spec = id.spec();
        if spec.bounded {
            return self == Constraint::Bounded;
        }
        match self {
            Constraint::None => true,
            // (B, Δ) checkers are ordered by construction
            Constraint::Ordered => spec.inputs == ["A", "B"] || spec.inputs == ["B", "Delta"],
            Constraint::Bounded => spec.inputs == ["A", "B"],
        }
    }
}

impl std::str::FromStr for Constraint {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Constraint::None),
            "ordered" => Ok(Constraint::Ordered),
            "bounded" => Ok(Constraint::Bounded),
            _ => Err(Error::Config(format!("unknown constraint `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FnSource {
    Fixed(PiecewiseFn),
    /// Random angle sums `a∈[0,2]`, `b∈[−2,2]`, `x0∈[0,2]`, one to three
    /// kinks, filtered to the checker's class (or `g_a` with `a∈[0,2]`).
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub inequality: InequalityId,
    pub function: FnSource,
    pub dim: usize,
    pub trials: u64,
    pub seed: u64,
    /// Upper bound on the operator norm of each sampled PSD matrix.
    pub scale: f64,
    pub constraint: Constraint,
    pub tol: Tolerance,
    /// Inputs that replace trial 0's sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject: Option<Vec<SymMatrix>>,
}

impl FuzzConfig {
    pub fn new(inequality: InequalityId, function: FnSource) -> Self {
        Self {
            inequality,
            function,
            dim: 3,
            trials: 100_000,
            seed: 0,
            scale: 2.0,
            constraint: Constraint::default_for(inequality),
            tol: Tolerance::Scaled(1e-8),
            inject: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials < 1 {
            return bad("trials must be >= 1".into());
        }
        if self.dim < 2 {
            return bad(format!("dim must be >= 2, got {}", self.dim));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return bad(format!("scale must be positive, got {}", self.scale));
        }
        if !self.constraint.allowed_for(self.inequality) {
            return bad(format!(
                "constraint {:?} does not apply to {}",
                self.constraint, self.inequality
            ));
        }
        if let FnSource::Fixed(f) = &self.function {
            if !function_meets(self.inequality, f) {
                return bad(format!("{f} is outside the function class of {}", self.inequality));
            }
        }
        if let Some(inputs) = &self.inject {
            if !matches!(self.function, FnSource::Fixed(_)) {
                return bad("injected inputs need a fixed function".into());
            }
            if inputs.len() != 2 || inputs.iter().any(|m| m.dim() != self.dim) {
                return bad(format!("inject expects two {0}x{0} matrices", self.dim));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub seed_index: u64,
    pub inputs: Vec<SymMatrix>,
    pub function: PiecewiseFn,
    pub margin: f64,
    pub report: CheckResult,
    pub constraint: Constraint,
    pub tol: Tolerance,
}

impl Violation {
    fn from_check(
        seed_index: u64,
        inputs: Vec<SymMatrix>,
        result: CheckResult,
        constraint: Constraint,
        tol: Tolerance,
    ) -> Self {
        Self {
            seed_index,
            margin: result.margin().expect("violations carry a report"),
            function: result.function.clone(),
            inputs,
            report: result,
            constraint,
            tol,
        }
    }

    /// Re-runs the checker on the stored inputs.
    pub fn replay(&self) -> Result<CheckResult> {
        check(self.report.inequality, &self.function, &self.inputs, self.tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub config: FuzzConfig,
    pub trials_run: u64,
    pub held: u64,
    /// Samples whose preconditions failed numerically; not counted as trials.
    pub skipped: u64,
    pub violations: Vec<Violation>,
    /// Shrunk copies of the first few violations, when shrinking was requested.
    #[serde(default)]
    pub shrunk: Vec<Violation>,
}

enum Outcome {
    Held,
    Skipped,
    Violated(Box<Violation>),
}

fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn sample_angle(rng: &mut ChaCha8Rng, sign: f64) -> Result<PiecewiseFn> {
    let slope = rng.random_range(0.0..=2.0);
    let n = rng.random_range(1..=3);
    let kinks: Vec<Kink> = (0..n)
        .map(|_| Kink {
            x0: rng.random_range(0.0..=2.0),
            b: sign * rng.random_range(0.0..=2.0),
        })
        .collect();
    Ok(PiecewiseFn::AngleSum(crate::scalar_fn::AngleSum::new(slope, kinks)?))
}

/// Draws a function in the checker's class by rejection.
pub fn sample_function(id: InequalityId, rng: &mut ChaCha8Rng) -> Result<PiecewiseFn> {
    const MAX_ATTEMPTS: usize = 10_000;
    for _ in 0..MAX_ATTEMPTS {
        let f = match id.spec().function {
            FnRequirement::GaFamily => PiecewiseFn::ga(rng.random_range(0.0..=2.0))?,
            FnRequirement::ConcaveIncreasing => sample_angle(rng, -1.0)?,
            FnRequirement::ConvexIncreasingZero => sample_angle(rng, 1.0)?,
            FnRequirement::ConcaveOrConvex => {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                sample_angle(rng, sign)?
            }
        };
        if function_meets(id, &f) {
            return Ok(f);
        }
    }
    Err(Error::Config(format!(
        "could not sample a function for {id} in {MAX_ATTEMPTS} attempts"
    )))
}

fn psd(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Result<SymMatrix> {
    let s = scale * rng.random_range(0.2..=1.0);
    sample_psd(rng, dim, s)
}

/// PSD sample that is diagonal with probability ½.
fn psd_maybe_diagonal(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Result<SymMatrix> {
    if rng.random_bool(0.5) {
        let d: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..=scale)).collect();
        Ok(SymMatrix::diag(&d))
    } else {
        psd(rng, dim, scale)
    }
}

/// Draws inputs that satisfy the checker's matrix preconditions.
pub fn sample_inputs(
    id: InequalityId,
    constraint: Constraint,
    rng: &mut ChaCha8Rng,
    dim: usize,
    scale: f64,
) -> Result<Vec<SymMatrix>> {
    let spec = id.spec();
    Ok(match (spec.inputs, constraint) {
        (["A", "B"], Constraint::Ordered) => {
            let b = psd(rng, dim, scale)?;
            let d = psd_maybe_diagonal(rng, dim, scale)?;
            vec![&b + &d, b]
        }
        (["A", "B"], Constraint::Bounded) => {
            let b = psd(rng, dim, scale)?;
            let p = psd(rng, dim, scale)?;
            let shift = SymMatrix::identity(dim).scaled(b.operator_norm()?);
            vec![&shift + &p, b]
        }
        (["A", "B"], Constraint::None) => vec![psd(rng, dim, scale)?, psd(rng, dim, scale)?],
        _ => {
            let first = psd(rng, dim, scale)?;
            vec![first, psd_maybe_diagonal(rng, dim, scale)?]
        }
    })
}

fn run_trial(cfg: &FuzzConfig, index: u64) -> Result<Outcome> {
    let mut rng = trial_rng(cfg.seed, index);
    let f = match &cfg.function {
        FnSource::Fixed(f) => f.clone(),
        FnSource::Random => sample_function(cfg.inequality, &mut rng)?,
    };
    let inputs = match (&cfg.inject, index) {
        (Some(injected), 0) => injected.clone(),
        _ => sample_inputs(cfg.inequality, cfg.constraint, &mut rng, cfg.dim, cfg.scale)?,
    };
    let result = check(cfg.inequality, &f, &inputs, cfg.tol)?;
    Ok(match result.verdict {
        Verdict::Holds => Outcome::Held,
        Verdict::PreconditionFailed => Outcome::Skipped,
        Verdict::Violated => Outcome::Violated(Box::new(Violation::from_check(
            index,
            inputs,
            result,
            cfg.constraint,
            cfg.tol,
        ))),
    })
}

/// Runs `cfg.trials` independent trials and collects violations in trial order.
pub fn fuzz(cfg: &FuzzConfig) -> Result<FuzzReport> {
    cfg.validate()?;
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let mut report = FuzzReport {
        config: cfg.clone(),
        trials_run: 0,
        held: 0,
        skipped: 0,
        violations: Vec::new(),
        shrunk: Vec::new(),
    };
    for o in outcomes {
        match o {
            Outcome::Held => {
                report.held += 1;
                report.trials_run += 1;
            }
            Outcome::Skipped => report.skipped += 1,
            Outcome::Violated(v) => {
                report.violations.push(*v);
                report.trials_run += 1;
            }
        }
    }
    Ok(report)
}

/// Whether inputs respect the constraint (and are PSD).
pub fn constraint_holds(
    id: InequalityId,
    constraint: Constraint,
    inputs: &[SymMatrix],
) -> Result<bool> {
    for m in inputs {
        if min_eigenvalue(m)? < -psd_tol(m)? {
            return Ok(false);
        }
    }
    if id.spec().inputs != ["A", "B"] {
        return Ok(true);
    }
    let (a, b) = (&inputs[0], &inputs[1]);
    Ok(match constraint {
        Constraint::None => true,
        Constraint::Ordered => min_eigenvalue(&(a - b))? >= -psd_tol(a)?,
        Constraint::Bounded => min_eigenvalue(a)? >= b.operator_norm()? - psd_tol(a)?,
    })
}

fn project(id: InequalityId, constraint: Constraint, inputs: &[SymMatrix]) -> Result<Vec<SymMatrix>> {
    let mut out = inputs
        .iter()
        .map(positive_part)
        .collect::<Result<Vec<_>>>()?;
    if id.spec().inputs == ["A", "B"] {
        let b = out[1].clone();
        let floor = match constraint {
            Constraint::None => return Ok(out),
            Constraint::Ordered => b,
            Constraint::Bounded => SymMatrix::identity(b.dim()).scaled(b.operator_norm()?),
        };
        out[0] = &floor + &positive_part(&(&out[0] - &floor))?;
    }
    Ok(out)
}

/// Coordinate descent on the violation margin.
///
/// Each step perturbs one symmetric entry pair of one input by `±η`,
/// projects back onto the constraint set and keeps the candidate only if it
/// still violates with a strictly smaller margin. `η` halves after a full
/// pass over all coordinates without progress.
pub fn shrink(v: &Violation, steps: usize) -> Result<Violation> {
    let id = v.report.inequality;
    let mut current = v.clone();
    if steps == 0 {
        return Ok(current);
    }
    let dim = v.inputs[0].dim();
    let coords: Vec<(usize, usize, usize)> = (0..v.inputs.len())
        .flat_map(|m| (0..dim).flat_map(move |i| (i..dim).map(move |j| (m, i, j))))
        .collect();
    let largest = v.inputs.iter().map(SymMatrix::max_abs).fold(0.0, f64::max);
    let mut eta = 0.05 * (1.0 + largest);
    let mut stale = 0;

    for step in 0..steps {
        let (m, i, j) = coords[step % coords.len()];
        let mut improved = false;
        for sign in [1.0, -1.0] {
            let mut candidate = current.inputs.clone();
            let value = candidate[m].get(i, j) + sign * eta;
            candidate[m] = candidate[m].with_entry(i, j, value);
            let candidate = project(id, v.constraint, &candidate)?;
            if !constraint_holds(id, v.constraint, &candidate)? {
                continue;
            }
            let result = check(id, &v.function, &candidate, v.tol)?;
            if result.verdict != Verdict::Violated {
                continue;
            }
            let margin = result.margin().expect("violated implies report");
            if margin < current.margin {
                current.inputs = candidate;
                current.margin = margin;
                current.report = result;
                improved = true;
                break;
            }
        }
        if improved {
            stale = 0;
        } else {
            stale += 1;
            if stale >= coords.len() {
                eta *= 0.5;
                stale = 0;
            }
        }
    }
    Ok(current)
}
