//! Solve-run configuration: a flat key-value text format with bracketed
//! sections, chosen so runs are trivially diffable and need no structured-
//! format dependency.
//!
//! ```text
//! # comment lines start with '#' or ';'
//! [params]
//! n = 3
//! s = 0.5
//! theta_frac = 0.3        # or: theta = 0.2 (exactly one of the two)
//!
//! [grid]
//! r_min = 1e-3
//! r_max = 1e3
//! count = 256
//!
//! [solver]
//! max_iters = 1500
//! step = 0.2
//! tol = 1e-8
//! seed = 7
//! ```
//!
//! Unknown sections or keys are rejected rather than ignored: a typo in a
//! tolerance should fail loudly, not silently run with the default.

use std::path::Path;

use serde_json::{json, Value};

use frac_hardy::{Error, Params, Result, SolveConfig};

/// Parse a solve configuration file into problem parameters, solver
/// controls, and a JSON snapshot of the effective values for the run record.
pub fn load_solve_config(path: &Path) -> Result<(Params, SolveConfig, Value)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    parse_solve_config(&text)
}

pub fn parse_solve_config(text: &str) -> Result<(Params, SolveConfig, Value)> {
    let mut n: Option<u32> = None;
    let mut s: Option<f64> = None;
    let mut theta: Option<f64> = None;
    let mut theta_frac: Option<f64> = None;
    let mut cfg = SolveConfig::default();

    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim().to_string();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::config(format!("line {lineno}: unterminated section header {line:?}")))?;
            match name {
                "params" | "grid" | "solver" => section = name.to_string(),
                other => {
                    return Err(Error::config(format!(
                        "line {lineno}: unknown section [{other}] (expected [params], [grid], or [solver])"
                    )))
                }
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(format!("line {lineno}: expected `key = value`, got {line:?}"))
        })?;
        let key = key.trim();
        let value = value.trim();
        match (section.as_str(), key) {
            ("params", "n") => n = Some(parse(value, lineno, "n")?),
            ("params", "s") => s = Some(parse(value, lineno, "s")?),
            ("params", "theta") => theta = Some(parse(value, lineno, "theta")?),
            ("params", "theta_frac") => theta_frac = Some(parse(value, lineno, "theta_frac")?),
            ("grid", "r_min") => cfg.r_min = parse(value, lineno, "r_min")?,
            ("grid", "r_max") => cfg.r_max = parse(value, lineno, "r_max")?,
            ("grid", "count") => cfg.count = parse(value, lineno, "count")?,
            ("solver", "max_iters") => cfg.max_iters = parse(value, lineno, "max_iters")?,
            ("solver", "step") => cfg.step = parse(value, lineno, "step")?,
            ("solver", "tol") => cfg.tol = parse(value, lineno, "tol")?,
            ("solver", "seed") => cfg.seed = parse(value, lineno, "seed")?,
            ("", _) => {
                return Err(Error::config(format!(
                    "line {lineno}: key {key:?} appears before any section header"
                )))
            }
            (sec, _) => {
                return Err(Error::config(format!(
                    "line {lineno}: unknown key {key:?} in section [{sec}]"
                )))
            }
        }
    }

    let n = n.ok_or_else(|| Error::config("[params] is missing `n`"))?;
    let s = s.ok_or_else(|| Error::config("[params] is missing `s`"))?;
    let p = match (theta, theta_frac) {
        (Some(t), None) => Params::new(n, s, t)?,
        (None, Some(f)) => Params::from_theta_fraction(n, s, f)?,
        (None, None) => {
            return Err(Error::config(
                "[params] needs exactly one of `theta` or `theta_frac`, found neither",
            ))
        }
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "[params] needs exactly one of `theta` or `theta_frac`, found both",
            ))
        }
    };

    let snapshot = json!({
        "params": { "n": p.n, "s": p.s, "theta": p.theta },
        "grid": { "r_min": cfg.r_min, "r_max": cfg.r_max, "count": cfg.count },
        "solver": {
            "max_iters": cfg.max_iters,
            "step": cfg.step,
            "tol": cfg.tol,
            "seed": cfg.seed,
        },
    });
    Ok((p, cfg, snapshot))
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse<T: std::str::FromStr>(value: &str, lineno: usize, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::config(format!("line {lineno}: {key} = {value:?}: {e}")))
}
