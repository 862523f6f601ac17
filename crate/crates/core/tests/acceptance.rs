//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use matineq::delta::{check_prop4b, corollary_checks, delta, delta_fd_oracle};
use matineq::fixtures::{self, FixtureOutcome};
use matineq::fuzz::{fuzz, sample_function, Constraint, FnSource, FuzzConfig};
use matineq::inequality_lab::{InequalityId, Verdict};
use matineq::majorization::{partial_sums, Tolerance};
use matineq::spectral::{eigh, random_sym, sample_orthogonal, sample_psd, sample_sym, Dense, SymMatrix};
use matineq::PiecewiseFn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUITE_TOL: Tolerance = Tolerance::Scaled(1e-8);

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn planted(values: &[f64], rng: &mut ChaCha8Rng) -> SymMatrix {
    let q = sample_orthogonal(rng, values.len()).unwrap();
    SymMatrix::diag(values).congruence(&q.transpose())
}

/// A spectrum of length `dim` with at least one repeated value.
fn degenerate_spectrum(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let distinct = rng.random_range(1..dim);
    let levels: Vec<f64> = (0..distinct).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut values: Vec<f64> = levels.clone();
    while values.len() < dim {
        values.push(levels[rng.random_range(0..distinct)]);
    }
    values
}

fn fixture_criterion(result: FixtureOutcome, elapsed: Duration) -> Outcome {
    let ok = result.reproduced && elapsed < Duration::from_secs(1);
    let mut detail = format!("{} in {elapsed:.2?}", result.name);
    for d in result.diff() {
        detail.push_str(&format!("; {d}"));
    }
    outcome(ok, detail)
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let r = fixtures::verify_q1().unwrap();
    fixture_criterion(r, t.elapsed())
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let r = fixtures::verify_q3().unwrap();
    fixture_criterion(r, t.elapsed())
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let r = fixtures::verify_q2().unwrap();
    let elapsed = t.elapsed();
    let k1 = r.checks[0].report.as_ref().map(|m| m.worst_k);
    let mut o = fixture_criterion(r, elapsed);
    o.ok &= k1 == Some(1);
    o
}

fn max_prefix_gap(x: &[f64], y: &[f64]) -> f64 {
    partial_sums(x)
        .iter()
        .zip(partial_sums(y))
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let mut worst_random = 0.0_f64;
    for i in 0..200u64 {
        let dim = 2 + (i % 5) as usize;
        let a = random_sym(dim, 2 * i, 2.0).unwrap();
        let c = random_sym(dim, 2 * i + 1, 2.0).unwrap();
        let d = delta(&c, &a, None).unwrap().values;
        let fd = delta_fd_oracle(&c, &a, None).unwrap();
        worst_random = worst_random.max(max_prefix_gap(&d, &fd));
    }
    let mut worst_planted = 0.0_f64;
    for i in 0..20u64 {
        let mut r = rng(4, i);
        let dim = 2 + (i % 5) as usize;
        let a = planted(&degenerate_spectrum(dim, &mut r), &mut r);
        let c = sample_sym(&mut r, dim, 2.0).unwrap();
        let d = delta(&c, &a, None).unwrap();
        assert!(d.clusters.len() < dim, "planted spectrum must be degenerate");
        let fd = delta_fd_oracle(&c, &a, None).unwrap();
        worst_planted = worst_planted.max(max_prefix_gap(&d.values, &fd));
    }
    let elapsed = t.elapsed();
    outcome(
        worst_random <= 1e-4 && worst_planted <= 1e-4 && elapsed < Duration::from_secs(30),
        format!(
            "max prefix-sum gap {worst_random:.2e} (random), {worst_planted:.2e} (degenerate) in {elapsed:.2?}"
        ),
    )
}

/// Runs 100 trials at each of dims 2..=6; returns (violations, skipped, trials).
fn suite(id: InequalityId, function: FnSource, seed: u64) -> (usize, u64, u64) {
    let mut violations = 0;
    let mut skipped = 0;
    let mut run = 0;
    for dim in 2..=6 {
        let mut cfg = FuzzConfig::new(id, function.clone());
        cfg.dim = dim;
        cfg.trials = 100;
        cfg.seed = seed + dim as u64;
        cfg.tol = SUITE_TOL;
        cfg.constraint = Constraint::default_for(id);
        let r = fuzz(&cfg).unwrap();
        violations += r.violations.len();
        skipped += r.skipped;
        run += r.trials_run;
    }
    (violations, skipped, run)
}

fn corollary_suite() -> (usize, usize) {
    let mut failures = 0;
    let mut schur_failures = 0;
    for i in 0..500u64 {
        let mut r = rng(57, i);
        let dim = 2 + (i % 5) as usize;
        let g = if i % 2 == 0 {
            sample_sym(&mut r, dim, 2.0).unwrap()
        } else {
            planted(&degenerate_spectrum(dim, &mut r), &mut r)
        };
        let c = sample_sym(&mut r, dim, 2.0).unwrap();
        let f = sample_function(InequalityId::BourinsStrengthened, &mut r).unwrap();
        let a = r.random_range(0.0..10.0);
        let report = corollary_checks(&g, &c, &f, a).unwrap();
        if !report.all_hold() {
            failures += 1;
        }
        let schur = report.item("ii").unwrap();
        if !schur.holds {
            schur_failures += 1;
        }
        // trace equality for the Schur item at 1e-9 scaled
        let d = delta(&c, &g, None).unwrap();
        if (d.sum() - c.trace()).abs() > 1e-9 * (1.0 + c.max_abs() * dim as f64) {
            schur_failures += 1;
        }
    }
    (failures, schur_failures)
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    let mut record = |label: &str, (v, s, n): (usize, u64, u64)| {
        ok &= v == 0 && s == 0 && n == 500;
        parts.push(format!("{label} {v}/{n}"));
    };
    record("(a)", suite(InequalityId::AndozhanSumConcave, FnSource::Random, 100));
    record("(b)", suite(InequalityId::AndozhanSumConvex, FnSource::Random, 200));
    record("(c) ggc", suite(InequalityId::PropGgcEntrywise, FnSource::Random, 300));
    record("(c) gg", suite(InequalityId::CorGgEntrywise, FnSource::Random, 400));
    for (j, a) in [0.0, 0.5, 1.0, 10.0].into_iter().enumerate() {
        let ga = FnSource::Fixed(PiecewiseFn::ga(a).unwrap());
        record(&format!("(d) g a={a}"), suite(InequalityId::PropG, ga.clone(), 500 + 10 * j as u64));
        record(&format!("(d) 4 a={a}"), suite(InequalityId::Prop4, ga, 600 + 10 * j as u64));
    }
    record("(e)", suite(InequalityId::BourinsStrengthened, FnSource::Random, 700));
    record(
        "(f) sqrt",
        suite(InequalityId::AndoDiffMonotone, FnSource::Fixed(PiecewiseFn::sqrt()), 800),
    );
    record(
        "(f) square",
        suite(InequalityId::AndoDiffInverse, FnSource::Fixed(PiecewiseFn::square()), 900),
    );
    let (cor, schur) = corollary_suite();
    ok &= cor == 0 && schur == 0;
    parts.push(format!("(g) {cor}/500 (schur {schur})"));
    let elapsed = t.elapsed();
    ok &= elapsed < Duration::from_secs(120);
    outcome(ok, format!("violations {} in {elapsed:.2?}", parts.join(", ")))
}

/// `C = B + W N Wᵀ` where `W` diagonalises `G` and the diagonal of `N` has
/// non-negative prefix sums, so `δ(B; G) ≺_dw δ(C; G)` by construction.
fn pp2_instance(i: u64) -> (SymMatrix, SymMatrix, PiecewiseFn, PiecewiseFn) {
    let mut r = rng(66, i);
    let dim = 2 + (i % 5) as usize;
    let g = sample_psd(&mut r, dim, 2.0).unwrap();
    let f1 = sample_function(InequalityId::BourinsStrengthened, &mut r).unwrap();
    let f2 = sample_function(InequalityId::BourinsStrengthened, &mut r).unwrap();
    let b = matineq::spectral::apply_fn(&g, &f2).unwrap();
    let perturbation = if i % 2 == 0 {
        sample_psd(&mut r, dim, 1.0).unwrap()
    } else {
        let prefix: Vec<f64> = (0..dim).map(|_| r.random_range(0.0..1.0)).collect();
        let off = sample_sym(&mut r, dim, 0.5).unwrap();
        let n = SymMatrix::from_fn(dim, |p, q| match (p == q, p) {
            (true, 0) => prefix[0],
            (true, _) => prefix[p] - prefix[p - 1],
            (false, _) => off.get(p, q),
        });
        let w: Dense = eigh(&g).unwrap().basis;
        n.congruence(&w.transpose())
    };
    (g, &b + &perturbation, f1, f2)
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let grid = [0.0, 0.1, 1.0, 10.0, 100.0];
    let mut bad = Vec::new();
    for i in 0..100u64 {
        let (g, c, f1, f2) = pp2_instance(i);
        let r = check_prop4b(&g, &c, &f1, &f2, &grid, SUITE_TOL).unwrap();
        if !(r.pp2_holds && r.pp1_holds && r.pp3_holds && r.consistent) {
            bad.push(i);
        }
    }
    let (x, y) = fixtures::q2_matrices();
    let c = fixtures::q2_difference(&x, &y).unwrap();
    let fixture = check_prop4b(
        &y,
        &c,
        &PiecewiseFn::identity(),
        &fixtures::q2_function(),
        &grid,
        Tolerance::Auto,
    )
    .unwrap();
    let pp1_fails_at: Vec<f64> = fixture
        .pp1
        .iter()
        .filter(|v| !v.report.holds)
        .map(|v| v.a)
        .collect();
    let elapsed = t.elapsed();
    let ok = bad.is_empty()
        && !fixture.pp2_holds
        && !pp1_fails_at.is_empty()
        && elapsed < Duration::from_secs(60);
    outcome(
        ok,
        format!(
            "{} of 100 constructed instances inconsistent {bad:?}; fixture pp2 holds={}, pp1 fails at a={pp1_fails_at:?} in {elapsed:.2?}",
            bad.len(),
            fixture.pp2_holds
        ),
    )
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let (a1, b1) = fixtures::q1_matrices();
    let (b3, d3) = fixtures::q3_matrices();
    let (x2, y2) = fixtures::q2_matrices();
    let cases = [
        (InequalityId::Q1DiffConvex, fixtures::q1_function(), 2, vec![a1, b1]),
        (InequalityId::Q3DiffConcaveOrdered, fixtures::q3_function(), 3, vec![b3, d3]),
        (InequalityId::Q2DeltaReduced, fixtures::q2_function(), 3, vec![x2, y2]),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (id, f, dim, inputs) in cases {
        let mut cfg = FuzzConfig::new(id, FnSource::Fixed(f));
        cfg.dim = dim;
        cfg.trials = 10;
        cfg.seed = 7;
        cfg.inject = Some(inputs);
        let report = fuzz(&cfg).unwrap();
        let first = report.violations.first().filter(|v| v.seed_index == 0);
        let replayed = first.is_some_and(|v| {
            let r = v.replay().unwrap();
            r.verdict == Verdict::Violated
                && r.margin().unwrap().to_bits() == v.margin.to_bits()
                && r == v.report
        });
        ok &= replayed;
        parts.push(format!(
            "{id} margin {}",
            first.map_or("none".into(), |v| format!("{:.8}", v.margin))
        ));
    }
    let mut theorem = FuzzConfig::new(InequalityId::AndozhanSumConcave, FnSource::Random);
    theorem.trials = 10_000;
    theorem.seed = 3;
    let r = fuzz(&theorem).unwrap();
    ok &= r.violations.is_empty() && r.trials_run == 10_000;
    let elapsed = t.elapsed();
    ok &= elapsed < Duration::from_secs(60);
    outcome(
        ok,
        format!(
            "{}; andozhan_sum_concave {} violations in {} trials, in {elapsed:.2?}",
            parts.join(", "),
            r.violations.len(),
            r.trials_run
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("question-1 fixture", criterion_1),
        ("question-3 fixture", criterion_2),
        ("reduced question-2 fixture", criterion_3),
        ("delta finite-difference oracle", criterion_4),
        ("theorem property suites", criterion_5),
        ("equivalence consistency", criterion_6),
        ("fuzzer soundness", criterion_7),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.ok { "PASS" } else { "FAIL" };
        println!("[{tag}] {}. {name}: {}", n + 1, o.detail);
        if !o.ok {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("all 7 acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
