//! The `matineq` command line.
//!
//! Exit codes: 0 when the property holds or the fixtures reproduce, 1 when a
//! violation or mismatch is found, 2 on any usage or input error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::delta::{delta, Cluster};
use crate::error::{Error, Result};
use crate::fixtures::{verify_paper_fixtures, FixtureOutcome};
use crate::fuzz::{fuzz, shrink, Constraint, FnSource, FuzzConfig, FuzzReport};
use crate::inequality_lab::{check, CheckResult, InequalityId, Verdict};
use crate::majorization::{MajReport, Tolerance};
use crate::scalar_fn::PiecewiseFn;
use crate::spectral::{load_matrix, Dense};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// How many violations `--shrink` refines.
const SHRINK_LIMIT: usize = 10;

#[derive(Debug, Parser)]
#[command(name = "matineq", version, about = "Check and search for matrix inequality violations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recompute the three reference counterexamples.
    VerifyPaper {
        #[arg(long)]
        json: bool,
    },
    /// Run one inequality checker on two matrices.
    Check {
        /// Inequality tag, e.g. q1_diff_convex.
        tag: InequalityId,
        /// Function spec, e.g. angle:a=1,b=1,x0=1 or sqrt.
        #[arg(long = "fn")]
        function: PiecewiseFn,
        #[arg(long, num_args = 2, value_names = ["FIRST", "SECOND"], required = true)]
        inputs: Vec<PathBuf>,
        /// Relative tolerance, scaled by 1 + max |partial sum|.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Compute the dominated majorisation vector of C relative to A.
    Delta {
        #[arg(long = "A", value_name = "A_JSON")]
        a: PathBuf,
        #[arg(long = "C", value_name = "C_JSON")]
        c: PathBuf,
        /// Absolute eigenvalue gap below which eigenvalues of A are merged.
        #[arg(long)]
        cluster_tol: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Seeded random search for violations.
    Fuzz {
        /// Inequality tag.
        tag: InequalityId,
        /// Function spec, or `random` to sample one per trial.
        #[arg(long = "fn")]
        function: String,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// none, ordered or bounded; bounded tags default to bounded.
        #[arg(long)]
        constraint: Option<Constraint>,
        /// Coordinate-descent steps applied to the first violations.
        #[arg(long, default_value_t = 0)]
        shrink: usize,
        /// Operator-norm bound of sampled matrices.
        #[arg(long, default_value_t = 2.0)]
        scale: f64,
        /// Relative tolerance, scaled by 1 + max |partial sum|.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Matrices used in place of trial 0's sample.
        #[arg(long, num_args = 2, value_names = ["FIRST", "SECOND"])]
        inject: Option<Vec<PathBuf>>,
        /// Write the full report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

/// Parses `argv` (including the program name), executes it and writes all
/// output to `out`. Returns the process exit code.
pub fn run<I, T, W>(argv: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            let _ = writeln!(out, "{first}");
            return EXIT_ERROR;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Input(format!("write failed: {e}"))
}

fn emit_json<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Input(format!("cannot serialise output: {e}")))?;
    writeln!(out, "{text}").map_err(io_err)
}

fn execute<W: Write>(command: Command, out: &mut W) -> Result<i32> {
    match command {
        Command::VerifyPaper { json } => verify_paper(json, out),
        Command::Check {
            tag,
            function,
            inputs,
            tol,
            json,
        } => {
            let mats = inputs.iter().map(load_matrix).collect::<Result<Vec<_>>>()?;
            let tol = tol.map_or(Tolerance::Auto, Tolerance::Scaled);
            let result = check(tag, &function, &mats, tol)?;
            if json {
                emit_json(out, &result)?;
            } else {
                print_check(&result, out)?;
            }
            Ok(match result.verdict {
                Verdict::Holds => EXIT_OK,
                Verdict::Violated => EXIT_VIOLATED,
                Verdict::PreconditionFailed => EXIT_ERROR,
            })
        }
        Command::Delta {
            a,
            c,
            cluster_tol,
            json,
        } => {
            let a = load_matrix(a)?;
            let c = load_matrix(c)?;
            let d = delta(&c, &a, cluster_tol)?;
            let trace = c.trace();
            let sum = d.sum();
            let output = DeltaOutput {
                partial_sums: d.partial_sums(),
                values: d.values,
                clusters: d.clusters,
                trace_check: TraceCheck {
                    trace_c: trace,
                    sum_delta: sum,
                    abs_diff: (trace - sum).abs(),
                },
                basis_used: d.basis_used,
            };
            if json {
                emit_json(out, &output)?;
            } else {
                print_delta(&output, out)?;
            }
            Ok(EXIT_OK)
        }
        Command::Fuzz {
            tag,
            function,
            dim,
            trials,
            seed,
            constraint,
            shrink: steps,
            scale,
            tol,
            inject,
            out: out_path,
            json,
        } => {
            let source = if function == "random" {
                FnSource::Random
            } else {
                FnSource::Fixed(function.parse()?)
            };
            let mut cfg = FuzzConfig::new(tag, source);
            cfg.dim = dim;
            cfg.trials = trials;
            cfg.seed = seed;
            cfg.scale = scale;
            cfg.tol = Tolerance::Scaled(tol);
            if let Some(c) = constraint {
                cfg.constraint = c;
            }
            if let Some(paths) = inject {
                cfg.inject = Some(paths.iter().map(load_matrix).collect::<Result<_>>()?);
            }
            let mut report = fuzz(&cfg)?;
            if steps > 0 {
                report.shrunk = report
                    .violations
                    .iter()
                    .take(SHRINK_LIMIT)
                    .map(|v| shrink(v, steps))
                    .collect::<Result<_>>()?;
            }
            if let Some(path) = out_path {
                let text = serde_json::to_string_pretty(&report)
                    .map_err(|e| Error::Input(format!("cannot serialise report: {e}")))?;
                std::fs::write(&path, text)
                    .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))?;
            }
            if json {
                emit_json(out, &report)?;
            } else {
                print_fuzz(&report, out)?;
            }
            Ok(if report.violations.is_empty() {
                EXIT_OK
            } else {
                EXIT_VIOLATED
            })
        }
    }
}

fn verify_paper<W: Write>(json: bool, out: &mut W) -> Result<i32> {
    let outcomes = verify_paper_fixtures()?;
    if json {
        emit_json(out, &outcomes)?;
    } else {
        for o in &outcomes {
            print_fixture(o, out)?;
        }
    }
    Ok(if outcomes.iter().all(|o| o.reproduced) {
        EXIT_OK
    } else {
        EXIT_VIOLATED
    })
}

#[derive(Debug, Serialize)]
struct TraceCheck {
    trace_c: f64,
    sum_delta: f64,
    abs_diff: f64,
}

#[derive(Debug, Serialize)]
struct DeltaOutput {
    values: Vec<f64>,
    partial_sums: Vec<f64>,
    clusters: Vec<Cluster>,
    trace_check: TraceCheck,
    basis_used: Dense,
}

/// Formats `x` with nine significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..9).contains(&mag) {
        let decimals = (8 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    }
}

fn table<W: Write>(out: &mut W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<String>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    writeln!(out, "{}", line(header.iter().map(|h| h.to_string()).collect())).map_err(io_err)?;
    for row in rows {
        writeln!(out, "{}", line(row.clone())).map_err(io_err)?;
    }
    Ok(())
}

fn print_report<W: Write>(r: &MajReport, out: &mut W) -> Result<()> {
    let rows: Vec<Vec<String>> = r
        .lhs_partial_sums
        .iter()
        .zip(&r.rhs_partial_sums)
        .enumerate()
        .map(|(k, (l, rr))| {
            let mark = if k + 1 == r.worst_k { "<" } else { "" };
            vec![
                (k + 1).to_string(),
                sig9(*l),
                sig9(*rr),
                sig9(rr - l),
                mark.to_string(),
            ]
        })
        .collect();
    table(out, &["k", "lhs", "rhs", "rhs-lhs", ""], &rows)?;
    writeln!(
        out,
        "relation {:?}  worst_margin {} at k={}  tol {}",
        r.relation,
        sig9(r.worst_margin),
        r.worst_k,
        sig9(r.tol)
    )
    .map_err(io_err)
}

fn print_check<W: Write>(r: &CheckResult, out: &mut W) -> Result<()> {
    writeln!(out, "{}  f = {}", r.inequality, r.function).map_err(io_err)?;
    for p in &r.preconditions {
        let mark = if p.met { "ok" } else { "FAILED" };
        writeln!(out, "  precondition {:<40} {mark}", p.name).map_err(io_err)?;
    }
    if let Some(note) = &r.note {
        writeln!(out, "  {note}").map_err(io_err)?;
    }
    if let Some(report) = &r.report {
        print_report(report, out)?;
    }
    let verdict = match r.verdict {
        Verdict::Holds => "HOLDS",
        Verdict::Violated => "VIOLATED",
        Verdict::PreconditionFailed => "PRECONDITION FAILED",
    };
    writeln!(out, "{verdict}").map_err(io_err)
}

fn print_delta<W: Write>(d: &DeltaOutput, out: &mut W) -> Result<()> {
    let mut cluster_of = Vec::new();
    for (i, c) in d.clusters.iter().enumerate() {
        cluster_of.extend(std::iter::repeat_n((i, c.eigenvalue_of_a), c.multiplicity));
    }
    let rows: Vec<Vec<String>> = d
        .values
        .iter()
        .zip(&d.partial_sums)
        .zip(&cluster_of)
        .enumerate()
        .map(|(k, ((v, s), (ci, ev)))| {
            vec![
                (k + 1).to_string(),
                (ci + 1).to_string(),
                sig9(*ev),
                sig9(*v),
                sig9(*s),
            ]
        })
        .collect();
    table(out, &["k", "cluster", "eig(A)", "delta", "partial sum"], &rows)?;
    let t = &d.trace_check;
    writeln!(
        out,
        "trace(C) {}  sum(delta) {}  |diff| {:.3e}",
        sig9(t.trace_c),
        sig9(t.sum_delta),
        t.abs_diff
    )
    .map_err(io_err)
}

fn print_fixture<W: Write>(o: &FixtureOutcome, out: &mut W) -> Result<()> {
    let rows: Vec<Vec<String>> = o
        .comparisons
        .iter()
        .map(|c| {
            vec![
                c.quantity.clone(),
                sig9(c.expected),
                sig9(c.computed),
                format!("{:.1e}", c.tolerance),
                if c.ok { "ok" } else { "MISMATCH" }.to_string(),
            ]
        })
        .collect();
    table(out, &["quantity", "printed", "computed", "tol", ""], &rows)?;
    for c in &o.checks {
        writeln!(
            out,
            "  {} with {}: {:?}, margin {}",
            c.inequality,
            c.function,
            c.verdict,
            c.margin().map_or("n/a".into(), sig9)
        )
        .map_err(io_err)?;
    }
    if o.reproduced {
        writeln!(out, "REPRODUCED  {}", o.name).map_err(io_err)?;
    } else {
        writeln!(out, "MISMATCH    {}", o.name).map_err(io_err)?;
        for d in o.diff() {
            writeln!(out, "  {d}").map_err(io_err)?;
        }
    }
    writeln!(out).map_err(io_err)
}

fn print_fuzz<W: Write>(r: &FuzzReport, out: &mut W) -> Result<()> {
    writeln!(
        out,
        "{}  dim {}  seed {}  constraint {:?}",
        r.config.inequality, r.config.dim, r.config.seed, r.config.constraint
    )
    .map_err(io_err)?;
    writeln!(
        out,
        "trials {}  held {}  skipped {}  violations {}",
        r.trials_run,
        r.held,
        r.skipped,
        r.violations.len()
    )
    .map_err(io_err)?;
    if !r.violations.is_empty() {
        let rows: Vec<Vec<String>> = r
            .violations
            .iter()
            .take(20)
            .map(|v| {
                vec![
                    v.seed_index.to_string(),
                    sig9(v.margin),
                    v.function.to_string(),
                ]
            })
            .collect();
        table(out, &["trial", "margin", "function"], &rows)?;
        if r.violations.len() > 20 {
            writeln!(out, "... {} more", r.violations.len() - 20).map_err(io_err)?;
        }
    }
    for s in &r.shrunk {
        writeln!(
            out,
            "shrunk trial {}: margin {}",
            s.seed_index,
            sig9(s.margin)
        )
        .map_err(io_err)?;
        for (i, m) in s.inputs.iter().enumerate() {
            writeln!(out, "input {}:\n{m}", i + 1).map_err(io_err)?;
        }
    }
    Ok(())
}
