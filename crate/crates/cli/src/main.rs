//! `teq`: numerically solve transfer equations
//! `y(s+k) = F(s, y(s), ..., y(s+k-1))` on horizontal strips of the complex
//! plane, far to the left of the origin, and verify the construction.
//!
//! Subcommands: `solve` (one point, JSON), `grid` (CSV sweep), `verify`
//! (hypothesis check + full diagnostics report), `hypothesis` (decay check
//! only). Every failure prints a machine-readable `{"error": {...}}` object
//! on standard output and exits with a documented code:
//!
//! | code | class |
//! |------|-------------------------------------------|
//! | 1    | I/O (unreadable input, unwritable output) |
//! | 2    | parse/validation of files and arguments   |
//! | 3    | solvability hypothesis violated           |
//! | 4    | point outside the strip / domain escape   |
//! | 5    | iteration failed to converge              |
//!
//! Outputs are deterministic byte-for-byte for fixed inputs.

mod problem_file;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};
use teq_core::{
    check_decay, decay_samples, ensure_contractive, evaluate, evaluate_grid, report, residual,
    solve, DecayCheck, Error64, Grid64, Problem64, Verdict, C64,
};

use problem_file::ProblemFile;

/// Disclaimer attached to every verification report: verdicts rest on finite
/// samples of the strip and domain, not on proofs.
const NOTE: &str = "sampled, not proven";

/// One failed run: exit code, machine-readable kind, human message, and any
/// structured details worth forwarding.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
    pub extra: Option<Value>,
}

impl CliError {
    pub fn io(message: String) -> Self {
        Self { code: 1, kind: "io", message, extra: None }
    }

    pub fn parse(message: String, extra: Option<Value>) -> Self {
        Self { code: 2, kind: "parse", message, extra }
    }

    pub fn domain(message: String, extra: Option<Value>) -> Self {
        Self { code: 4, kind: "domain", message, extra }
    }

    /// Map a solver error onto the exit-code contract.
    pub fn from_core(e: Error64) -> Self {
        let message = e.to_string();
        match e {
            Error64::Parse(pe) => Self {
                code: 2,
                kind: "parse",
                message,
                extra: Some(json!({ "position": pe.position })),
            },
            Error64::InvalidInput(_) => Self { code: 2, kind: "parse", message, extra: None },
            Error64::HypothesisFailure { lambda, cutoff } => Self {
                code: 3,
                kind: "hypothesis_failure",
                message,
                extra: Some(json!({ "lambda": lambda, "cutoff": cutoff })),
            },
            Error64::DecayFailure { last_rho, probed } => Self {
                code: 3,
                kind: "decay_failure",
                message,
                extra: Some(json!({ "last_rho": last_rho, "probed": probed })),
            },
            Error64::OutsideStrip { point, half_height } => Self {
                code: 4,
                kind: "outside_strip",
                message,
                extra: Some(json!({ "point": complex_json(point), "half_height": half_height })),
            },
            Error64::DomainEscape { point, value } => Self {
                code: 4,
                kind: "domain_escape",
                message,
                extra: Some(json!({ "point": complex_json(point), "value": complex_json(value) })),
            },
            Error64::NonFiniteValue { at } => Self {
                code: 4,
                kind: "non_finite",
                message,
                extra: Some(json!({ "point": complex_json(at) })),
            },
            Error64::Eval(_) => Self { code: 4, kind: "evaluation", message, extra: None },
            Error64::TruncationLimit { n_max, last_diff } => Self {
                code: 5,
                kind: "truncation_limit",
                message,
                extra: Some(json!({ "n_max": n_max, "last_diff": last_diff })),
            },
            Error64::NoConvergence { levels, last_diff } => Self {
                code: 5,
                kind: "no_convergence",
                message,
                extra: Some(json!({ "levels": levels, "last_diff": last_diff })),
            },
            Error64::ContractionViolation { mu } => Self {
                code: 5,
                kind: "contraction_violation",
                message,
                extra: Some(json!({ "mu": mu })),
            },
        }
    }
}

/// Solve a transfer equation `y(s+k) = F(s, y(s), ..., y(s+k-1))` on a
/// horizontal strip and report values, grids, or verification diagnostics.
#[derive(Debug, Parser)]
#[command(name = "teq", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve far to the left and evaluate the solution at one point (JSON).
    Solve {
        /// Problem file (JSON).
        problem: PathBuf,
        /// Evaluation point, written "re,im".
        #[arg(long, allow_hyphen_values = true)]
        at: String,
    },
    /// Evaluate the solution on a rectangular grid and write a CSV file.
    Grid {
        /// Problem file (JSON).
        problem: PathBuf,
        /// Real-axis sweep, written "lo:hi:step".
        #[arg(long, allow_hyphen_values = true)]
        re: String,
        /// Imaginary-axis sweep, written "lo:hi:step".
        #[arg(long, allow_hyphen_values = true)]
        im: String,
        /// Output CSV path; written atomically (temp file + rename).
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the decay hypothesis, solve, and print a full report (JSON).
    Verify {
        /// Problem file (JSON).
        problem: PathBuf,
        /// Deepest tail norm probed by the decay check.
        #[arg(long, default_value_t = 12)]
        jmax: usize,
        /// Stop after the hypothesis check; report only that section.
        #[arg(long)]
        hypothesis_only: bool,
    },
    /// Shorthand for `verify --hypothesis-only`.
    Hypothesis {
        /// Problem file (JSON).
        problem: PathBuf,
        /// Deepest tail norm probed by the decay check.
        #[arg(long, default_value_t = 12)]
        jmax: usize,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            let mut fields = Map::new();
            fields.insert("kind".into(), Value::String(e.kind.into()));
            fields.insert("message".into(), Value::String(e.message));
            if let Some(Value::Object(extra)) = e.extra {
                for (key, value) in extra {
                    fields.insert(key, value);
                }
            }
            print_json(&json!({ "error": fields }));
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Solve { problem, at } => cmd_solve(&problem, &at),
        Command::Grid { problem, re, im, out } => cmd_grid(&problem, &re, &im, &out),
        Command::Verify { problem, jmax, hypothesis_only } => {
            cmd_verify(&problem, jmax, hypothesis_only)
        }
        Command::Hypothesis { problem, jmax } => cmd_verify(&problem, jmax, true),
    }
}

fn cmd_solve(path: &Path, at_text: &str) -> Result<ExitCode, CliError> {
    let built = ProblemFile::load(path)?.build()?;
    let at = parse_point(at_text)?;
    let p = ensure_contractive(&built.problem).map_err(CliError::from_core)?;
    let mut h = solve(&p, default_base(&p)).map_err(CliError::from_core)?;
    let value = evaluate(&mut h, at).map_err(CliError::from_core)?;
    let res = residual(&mut h, at).ok();
    print_json(&json!({
        "point": complex_json(at),
        "value": complex_json(value),
        "residual": res,
        "diagnostics": {
            "lambda": h.lambda_est(),
            "mu_predicted": h.mu_predicted(),
            "mu_measured": h.mu_est(),
            "levels": h.n_star(),
            "last_level_diff": h.last_diff(),
            "error_bound": h.error_bound(),
            "cutoff": p.cutoff().value(),
            "base": complex_json(h.base()),
        },
    }));
    Ok(ExitCode::SUCCESS)
}

fn cmd_grid(path: &Path, re_text: &str, im_text: &str, out: &Path) -> Result<ExitCode, CliError> {
    let built = ProblemFile::load(path)?.build()?;
    let (re_lo, re_hi, re_step) = parse_range(re_text, "re")?;
    let (im_lo, im_hi, im_step) = parse_range(im_text, "im")?;
    let grid =
        Grid64::new(re_lo, re_hi, re_step, im_lo, im_hi, im_step).map_err(CliError::from_core)?;
    // Validate the whole grid before any heavy work so a bad request can
    // never leave a partial output file behind.
    for s in grid.points() {
        if !built.problem.strip().contains(s) {
            return Err(CliError::domain(
                format!(
                    "grid point {s} lies outside the strip |Im s| < {}; nothing was written",
                    built.problem.strip().half_height()
                ),
                Some(json!({ "point": complex_json(s) })),
            ));
        }
    }
    let p = ensure_contractive(&built.problem).map_err(CliError::from_core)?;
    let mut h = solve(&p, default_base(&p)).map_err(CliError::from_core)?;
    let rows = evaluate_grid(&mut h, &grid);
    let mut csv = String::with_capacity(rows.len() * 96 + 40);
    csv.push_str("re_s,im_s,re_y,im_y,residual\n");
    for row in &rows {
        let _ = write!(csv, "{:.16e},{:.16e},", row.s.re, row.s.im);
        match row.value {
            Some(v) => {
                let _ = write!(csv, "{:.16e},{:.16e},", v.re, v.im);
            }
            None => csv.push_str(",,"),
        }
        if let Some(r) = row.residual {
            let _ = write!(csv, "{r:.16e}");
        }
        csv.push('\n');
    }
    write_atomic(out, csv.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(path: &Path, jmax: usize, hypothesis_only: bool) -> Result<ExitCode, CliError> {
    let built = ProblemFile::load(path)?.build()?;
    let raw = &built.problem;
    let (ss, zs) = decay_samples(raw);
    let decay = check_decay(raw, jmax, &ss, &zs).map_err(CliError::from_core)?;
    let hypothesis_failed = decay.verdict == Verdict::Fail;
    if hypothesis_only || hypothesis_failed {
        print_json(&json!({
            "hypothesis": decay_json(&decay),
            "residual_stats": null,
            "z_independence": null,
            "contraction": null,
            "asymptotics": null,
            "holomorphy": null,
            "note": NOTE,
        }));
        return Ok(if hypothesis_failed { ExitCode::from(3) } else { ExitCode::SUCCESS });
    }
    let p = ensure_contractive(raw).map_err(CliError::from_core)?;
    let mut h = solve(&p, default_base(&p)).map_err(CliError::from_core)?;
    let rep = report(&mut h, jmax, built.model.as_ref()).map_err(CliError::from_core)?;
    let residual_verdict =
        if rep.residual_max <= p.tolerances().residual_tol { Verdict::Pass } else { Verdict::Fail };
    let asymptotics = match (&rep.asymptotic_ratios, &built.model_text) {
        (Some(ratios), Some(text)) => json!({
            "model": text,
            "ratios": ratios
                .iter()
                .map(|(re_s, ratio)| json!({ "re_s": re_s, "ratio": complex_json(*ratio) }))
                .collect::<Vec<_>>(),
        }),
        _ => Value::Null,
    };
    print_json(&json!({
        "hypothesis": decay_json(&rep.hypothesis),
        "residual_stats": {
            "max": rep.residual_max,
            "mean": rep.residual_mean,
            "tolerance": p.tolerances().residual_tol,
            "verdict": residual_verdict.to_string(),
        },
        "z_independence": { "spread": rep.z_spread },
        "contraction": {
            "lambda": rep.lambda,
            "mu_predicted": rep.mu_predicted,
            "mu_measured": rep.mu_measured,
            "levels": h.n_star(),
            "error_bound": h.error_bound(),
        },
        "asymptotics": asymptotics,
        "holomorphy": {
            "defect": rep.holomorphy_defect,
            "radius": teq_core::verify::REPORT_CONTOUR_RADIUS,
            "nodes": teq_core::verify::REPORT_CONTOUR_NODES,
        },
        "note": NOTE,
    }));
    Ok(ExitCode::SUCCESS)
}

/// Default solve base: six units left of the contractive cutoff, on the real
/// axis. Left enough that values near the cutoff come out of genuine level
/// iteration rather than forward recursion alone.
fn default_base(p: &Problem64) -> C64 {
    C64::new(-(p.cutoff().value() + 6.0), 0.0)
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn complex_json(v: C64) -> Value {
    json!({ "re": v.re, "im": v.im })
}

fn decay_json(d: &DecayCheck<f64>) -> Value {
    json!({
        "rho": d.rho,
        "partial_sums": d.partial_sums,
        "est_ratio": d.est_ratio,
        "verdict": d.verdict.to_string(),
    })
}

fn parse_point(text: &str) -> Result<C64, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::parse(
            format!("evaluation point must be \"re,im\", got {text:?}"),
            None,
        ));
    }
    let number = |part: &str, axis: &str| {
        part.trim().parse::<f64>().map_err(|e| {
            CliError::parse(format!("bad {axis} part {part:?} in point {text:?}: {e}"), None)
        })
    };
    Ok(C64::new(number(parts[0], "real")?, number(parts[1], "imaginary")?))
}

fn parse_range(text: &str, axis: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::parse(
            format!("{axis} range must be \"lo:hi:step\", got {text:?}"),
            None,
        ));
    }
    let mut nums = [0.0f64; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part.trim().parse::<f64>().map_err(|e| {
            CliError::parse(format!("bad number {part:?} in {axis} range {text:?}: {e}"), None)
        })?;
    }
    Ok((nums[0], nums[1], nums[2]))
}

/// Write through a temporary file in the destination directory, then rename.
/// A failed run never leaves a partial file at `path`.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| {
        CliError::io(format!("cannot create a temporary file in {}: {e}", dir.display()))
    })?;
    tmp.write_all(bytes)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::io(format!("cannot move the temporary file to {}: {e}", path.display())))?;
    Ok(())
}
