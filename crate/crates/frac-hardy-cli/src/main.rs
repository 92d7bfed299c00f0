//! Command-line front end for the radial numerics library: constants and
//! exponent tables, model-profile evaluation, the variational solve, and the
//! verification suite.
//!
//! Conventions shared by every subcommand:
//! - all outputs land in `--out-dir` (default: the working directory), CSVs
//!   with a header row and 17-significant-digit numbers, reports as JSON;
//! - a `run_record.json` is written even when the command fails, listing the
//!   parameters, every emitted file, and the error;
//! - exit codes: 0 success, 2 domain/config error, 3 non-convergence,
//!   4 check failure;
//! - `FRAC_HARDY_THREADS` caps the size of the internal thread pool.

mod config;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use frac_hardy::quad::QuadratureSpec;
use frac_hardy::{
    cns_closed, cns_integral, fmt_f64, lambda_ns, make_grid, maximize_q, p_eta, read_radial_csv,
    solve_alpha, standard_checks, write_radial_csv, Error, Params, Result,
};

use record::{timestamp, RunContext};

const EXIT_DOMAIN: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;
const EXIT_CHECK_FAILURE: u8 = 4;

/// Tolerance for the exponent root solve; well below every published digit.
const ALPHA_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(
    name = "frac-hardy",
    version,
    about = "Radial numerics for a doubly critical fractional equation: \
             constants, exponents, model profiles, variational solves, and \
             verification checks"
)]
struct Cli {
    /// Directory that receives every output file (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print and append the normalization and Hardy constants for (N, s).
    Constants(ConstantsArgs),
    /// Tabulate the inner exponent, shape parameter, and asymptotic slopes.
    Exponent(ExponentArgs),
    /// Evaluate the model profile on a log grid and write it as CSV.
    Profile(ProfileArgs),
    /// Maximize the critical quotient per a config file; write the report.
    Solve(SolveArgs),
    /// Run verification checks against a stored solution CSV.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ConstantsArgs {
    /// Dimension.
    #[arg(long = "N")]
    n: u32,
    /// Fractional order in (0, 1]; s = 1 has no integral normalization.
    #[arg(long)]
    s: f64,
}

#[derive(Args)]
struct ThetaArgs {
    /// Hardy coupling, absolute value in [0, Lambda).
    #[arg(long, conflicts_with = "theta_frac")]
    theta: Option<f64>,
    /// Hardy coupling as a fraction of the sharp constant, in [0, 1).
    #[arg(long)]
    theta_frac: Option<f64>,
}

impl ThetaArgs {
    fn resolve(&self, n: u32, s: f64) -> Result<Params> {
        match (self.theta, self.theta_frac) {
            (Some(t), None) => Params::new(n, s, t),
            (None, Some(f)) => Params::from_theta_fraction(n, s, f),
            (None, None) => Err(Error::config(
                "one of --theta or --theta-frac is required",
            )),
            (Some(_), Some(_)) => Err(Error::config(
                "give only one of --theta and --theta-frac",
            )),
        }
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({ "theta": self.theta, "theta_frac": self.theta_frac })
    }
}

#[derive(Args)]
struct ExponentArgs {
    /// Dimension.
    #[arg(long = "N")]
    n: u32,
    /// Fractional order in (0, 1]; s = 1 covers the classical limit.
    #[arg(long)]
    s: f64,
    #[command(flatten)]
    theta: ThetaArgs,
    /// Emit this many rows sweeping the coupling from 0 to the given value.
    #[arg(long)]
    sweep: Option<usize>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Dimension.
    #[arg(long = "N")]
    n: u32,
    /// Fractional order in (0, 1].
    #[arg(long)]
    s: f64,
    #[command(flatten)]
    theta: ThetaArgs,
    /// Inner truncation radius of the evaluation grid.
    #[arg(long, default_value_t = 1e-3)]
    r_min: f64,
    /// Outer truncation radius of the evaluation grid.
    #[arg(long, default_value_t = 1e3)]
    r_max: f64,
    /// Number of log-spaced grid nodes.
    #[arg(long, default_value_t = 256)]
    count: usize,
}

#[derive(Args)]
struct SolveArgs {
    /// Config file with [params], [grid], and [solver] sections.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Solution CSV produced by `solve` (or any radial-function CSV).
    #[arg(long)]
    solution: PathBuf,
    #[command(flatten)]
    theta: ThetaArgs,
    /// Comma-separated subset of checks to run (default: all of them).
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
}

fn main() -> ExitCode {
    if let Ok(raw) = std::env::var("FRAC_HARDY_THREADS") {
        match raw.parse::<usize>() {
            Ok(k) if k >= 1 => {
                // Ignore the error from a second initialization: the pool can
                // only be configured once per process, which is exactly once.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => eprintln!("warning: FRAC_HARDY_THREADS must be a positive integer, ignoring {raw:?}"),
        }
    }
    let cli = Cli::parse();
    run(cli)
}

fn run(cli: Cli) -> ExitCode {
    let started = timestamp();
    if let Err(e) = std::fs::create_dir_all(&cli.out_dir) {
        eprintln!("error: cannot create output directory {}: {e}", cli.out_dir.display());
        return ExitCode::from(EXIT_DOMAIN);
    }
    let mut ctx = RunContext::new(cli.out_dir.clone());
    let status = match &cli.command {
        Command::Constants(a) => cmd_constants(a, &mut ctx),
        Command::Exponent(a) => cmd_exponent(a, &mut ctx),
        Command::Profile(a) => cmd_profile(a, &mut ctx),
        Command::Solve(a) => cmd_solve(a, &mut ctx),
        Command::Verify(a) => cmd_verify(a, &mut ctx),
    };
    let (code, error) = match status {
        Ok(code) => (code, None),
        Err(e) => {
            eprintln!("error: {e}");
            (exit_code_for(&e), Some(e.to_string()))
        }
    };
    let name = match &cli.command {
        Command::Constants(_) => "constants",
        Command::Exponent(_) => "exponent",
        Command::Profile(_) => "profile",
        Command::Solve(_) => "solve",
        Command::Verify(_) => "verify",
    };
    if let Err(e) = ctx.finish(name, started, error) {
        eprintln!("error: failed to write run record: {e}");
        return ExitCode::from(code.max(EXIT_DOMAIN));
    }
    ExitCode::from(code)
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::NonConvergence(_) => EXIT_NONCONVERGENCE,
        Error::Domain(_) | Error::Config(_) | Error::Io(_) => EXIT_DOMAIN,
    }
}

fn cmd_constants(a: &ConstantsArgs, ctx: &mut RunContext) -> Result<u8> {
    ctx.config = json!({ "N": a.n, "s": a.s });
    // Gate on the full parameter precondition: the Gamma-quotient formulas
    // extend beyond N > 2s, but rows outside it have no equation behind them.
    let p = Params::new(a.n, a.s, 0.0)?;
    ctx.params = Some(p);
    let lambda = lambda_ns(a.n, a.s)?;
    let (closed, integral) = if a.s < 1.0 {
        let c = cns_closed(a.n, a.s)?;
        // The independent quadrature route is only implemented in the
        // dimensions where the angular reduction is hand-checked.
        let i = if (1..=3).contains(&a.n) {
            Some(cns_integral(a.n, a.s, &QuadratureSpec::default())?)
        } else {
            None
        };
        (Some(c), i)
    } else {
        (None, None)
    };

    let na = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "n/a".to_string());
    let row = format!(
        "{},{},{},{},{}\n",
        a.n,
        fmt_f64(a.s),
        na(closed),
        na(integral),
        fmt_f64(lambda)
    );
    println!(
        "N={} s={} c_closed={} c_integral={} lambda={}",
        a.n,
        a.s,
        na(closed),
        na(integral),
        fmt_f64(lambda)
    );

    // Append to any existing table so repeated runs build up one CSV.
    let path = ctx.out_dir().join("constants.csv");
    let mut content = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| "N,s,c_closed,c_integral,lambda\n".to_string());
    if !content.ends_with('\n') {
        content.push('\n');
    }
    content.push_str(&row);
    ctx.write_bytes("constants.csv", content.as_bytes())?;
    Ok(0)
}

/// Coupling values for a sweep: `k` evenly spaced points from 0 to `theta`
/// inclusive (a single point is the target itself).
fn sweep_thetas(theta: f64, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::config("--sweep must be at least 1"));
    }
    if k == 1 {
        return Ok(vec![theta]);
    }
    Ok((0..k)
        .map(|i| theta * i as f64 / (k - 1) as f64)
        .collect())
}

fn cmd_exponent(a: &ExponentArgs, ctx: &mut RunContext) -> Result<u8> {
    let mut snap = a.theta.snapshot();
    snap["N"] = json!(a.n);
    snap["s"] = json!(a.s);
    snap["sweep"] = json!(a.sweep);
    ctx.config = snap;

    let target = a.theta.resolve(a.n, a.s)?;
    ctx.params = Some(target);
    let thetas = sweep_thetas(target.theta, a.sweep.unwrap_or(1))?;

    let mut out = String::from("N,s,theta,lambda,alpha,eta,inner_slope,outer_slope\n");
    for theta in &thetas {
        let p = Params::new(a.n, a.s, *theta)?;
        let e = solve_alpha(&p, ALPHA_TOL)?;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            a.n,
            fmt_f64(a.s),
            fmt_f64(*theta),
            fmt_f64(e.lambda),
            fmt_f64(e.alpha),
            fmt_f64(e.eta),
            fmt_f64(e.inner_slope),
            fmt_f64(e.outer_slope)
        ));
    }
    print!("{out}");
    ctx.write_bytes("exponent.csv", out.as_bytes())?;
    Ok(0)
}

fn cmd_profile(a: &ProfileArgs, ctx: &mut RunContext) -> Result<u8> {
    let mut snap = a.theta.snapshot();
    snap["N"] = json!(a.n);
    snap["s"] = json!(a.s);
    snap["grid"] = json!({ "r_min": a.r_min, "r_max": a.r_max, "count": a.count });
    ctx.config = snap;

    let p = a.theta.resolve(a.n, a.s)?;
    ctx.params = Some(p);
    let e = solve_alpha(&p, ALPHA_TOL)?;
    let grid = make_grid(a.r_min, a.r_max, a.count, a.n)?;
    let u = p_eta(grid, a.s, e.eta)?;
    let path = ctx.register("profile.csv");
    write_radial_csv(&path, &u)?;
    println!(
        "wrote profile.csv: {} nodes on [{:e}, {:e}], eta = {}",
        a.count, a.r_min, a.r_max, e.eta
    );
    Ok(0)
}

fn cmd_solve(a: &SolveArgs, ctx: &mut RunContext) -> Result<u8> {
    let (p, cfg, snapshot) = config::load_solve_config(&a.config)?;
    ctx.params = Some(p);
    ctx.config = snapshot;

    let report = maximize_q(&p, &cfg)?;
    let summary = report.summary(&p);
    ctx.write_json("solve_report.json", &summary)?;
    let path = ctx.register("maximizer.csv");
    write_radial_csv(&path, &report.maximizer)?;
    let path = ctx.register("solution.csv");
    write_radial_csv(&path, &report.solution)?;
    println!(
        "S_theta = {:.8} after {} accepted steps; EL residual {:.3e}; fitted slopes ({:.4}, {:.4})",
        summary.s_theta,
        summary.iterations,
        summary.el_residual,
        summary.inner_slope_fit,
        summary.outer_slope_fit
    );
    println!("wrote solve_report.json, maximizer.csv, solution.csv");
    Ok(0)
}

fn cmd_verify(a: &VerifyArgs, ctx: &mut RunContext) -> Result<u8> {
    let mut snap = a.theta.snapshot();
    snap["solution"] = json!(a.solution.display().to_string());
    snap["checks"] = json!(a.checks);
    ctx.config = snap;

    let u = read_radial_csv(&a.solution)?;
    let p = a.theta.resolve(u.grid.n, u.s)?;
    ctx.params = Some(p);

    let registry = standard_checks();
    let selected: Vec<&str> = if a.checks.is_empty() {
        registry.iter().map(|c| c.name()).collect()
    } else {
        let mut names = Vec::new();
        for want in &a.checks {
            let found = registry.iter().find(|c| c.name() == want.as_str());
            match found {
                Some(c) => names.push(c.name()),
                None => {
                    let known: Vec<_> = registry.iter().map(|c| c.name()).collect();
                    return Err(Error::config(format!(
                        "unknown check {want:?}; available: {}",
                        known.join(", ")
                    )));
                }
            }
        }
        names
    };

    let mut csv = String::from("name,relative_error,tolerance,pass\n");
    let mut all_pass = true;
    for name in selected {
        let check = registry.iter().find(|c| c.name() == name).unwrap();
        let report = check.run(&u, &p)?;
        println!(
            "{name}: {} (relative error {:.3e}, tolerance {:.3e})",
            if report.pass { "pass" } else { "FAIL" },
            report.relative_error,
            report.tolerance
        );
        csv.push_str(&format!(
            "{},{},{},{}\n",
            report.name,
            fmt_f64(report.relative_error),
            fmt_f64(report.tolerance),
            report.pass
        ));
        ctx.write_json(&format!("check_{}.json", name.replace('-', "_")), &report)?;
        all_pass &= report.pass;
    }
    ctx.write_bytes("checks.csv", csv.as_bytes())?;
    Ok(if all_pass { 0 } else { EXIT_CHECK_FAILURE })
}
