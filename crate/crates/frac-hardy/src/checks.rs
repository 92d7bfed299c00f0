//! Structural verification checks: quantitative identities and qualitative
//! bounds that any correct solution profile must satisfy, each packaged as a
//! [`CheckReport`] with a declared tolerance. The checks are exposed both as
//! plain functions and through the [`Check`] trait registry so a verification
//! suite can run them uniformly over a profile.
//!
//! The quantitative anchor is the ground-state representation: substituting
//! `u = r^{-alpha} v` turns the Hardy-shifted quadratic form into a pure
//! weighted pair form,
//!
//! `(c/2) [u]^2 - theta int u^2 r^{-2s} = (c/2) intint |v(x)-v(y)|^2 (|x||y|)^{-alpha} K`,
//!
//! which the discrete forms must reproduce to a grid-level tolerance. The
//! qualitative checks (flatness of `r^alpha u` near the origin, two-sided
//! comparison with the model profile, a weighted Harnack quotient) guard the
//! shape of computed solutions rather than a single number.

use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::constants::cns_closed;
use crate::error::{Error, Result};
use crate::exponents::solve_alpha;
use crate::forms::{hardy_term, pair_form, ExteriorPolicy};
use crate::grid::{make_grid, RadialFunction, RadialGrid};
use crate::kernel::cached_angular_kernel;
use crate::params::Params;
use crate::profile::p_eta;
use crate::special::sphere_area;

const GSR_TOL: f64 = 1e-3;
const WEIGHTED_TOL: f64 = 0.1;
const LINFTY_TOL: f64 = 0.1;
const SANDWICH_TOL: f64 = 10.0;
const HARNACK_TOL: f64 = 0.2;
/// Identity checks measure against `max(|lhs|, |rhs|, floor)` so that an
/// exactly-zero identity cannot divide by zero.
const REL_FLOOR: f64 = 1e-14;

/// Outcome of one verification check. `pass` is exactly
/// `relative_error <= tolerance`; `metadata` records the parameters and grid
/// the check actually ran on.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub metadata: Value,
}

impl CheckReport {
    fn build(
        name: &str,
        lhs: f64,
        rhs: f64,
        relative_error: f64,
        tolerance: f64,
        metadata: Value,
    ) -> Self {
        CheckReport {
            name: name.to_string(),
            lhs,
            rhs,
            relative_error,
            tolerance,
            pass: relative_error <= tolerance,
            metadata,
        }
    }
}

fn base_metadata(p: &Params, grid: &RadialGrid) -> Value {
    json!({
        "n": p.n,
        "s": p.s,
        "theta": p.theta,
        "grid": {
            "r_min": grid.r_min,
            "r_max": grid.r_max,
            "count": grid.len(),
        },
    })
}

/// A named verification check runnable on any profile. Implementations build
/// whatever kernels and forms they need internally (memoized per grid), so a
/// suite can hold them as trait objects and run them uniformly.
pub trait Check {
    fn name(&self) -> &'static str;
    fn run(&self, u: &RadialFunction, p: &Params) -> Result<CheckReport>;
}

/// The standard verification suite, in the order a report should list it.
pub fn standard_checks() -> Vec<Box<dyn Check>> {
    vec![
        Box::new(GsrCheck),
        Box::new(WeightedEquationCheck),
        Box::new(LinftyCheck),
        Box::new(SandwichCheck),
        Box::new(HarnackCheck { q: 1.0, r: None }),
    ]
}

/// Ground-state representation on a compactly supported profile: the
/// Hardy-shifted form of `u` must equal the weighted pair form of
/// `v = r^alpha u`. Both sides extend the grid by zero, which is exact for
/// profiles vanishing near the truncation ends; the input must be zero on the
/// five cells nearest each end.
pub fn gsr_check(
    u: &RadialFunction,
    p: &Params,
    ker: &crate::kernel::AngularKernel,
) -> Result<CheckReport> {
    p.validate()?;
    p.require_nonlocal()?;
    ker.check_grid(&u.grid)?;
    if p.s != u.s {
        return Err(Error::domain(format!(
            "profile order {} does not match parameter order {}",
            u.s, p.s
        )));
    }
    let g = &u.grid;
    let n = g.len();
    if n < 12 {
        return Err(Error::domain("representation check needs at least 12 nodes"));
    }
    let pad = 5;
    if u.values[..pad].iter().any(|&v| v != 0.0)
        || u.values[n - pad..].iter().any(|&v| v != 0.0)
    {
        return Err(Error::domain(
            "representation check needs a profile vanishing on the five cells nearest each end",
        ));
    }

    let alpha = solve_alpha(p, 1e-13)?.alpha;
    let kap = 0.5 * cns_closed(p.n, p.s)? * sphere_area(p.n)?;
    let e = (p.n as f64) - 1.0;

    let plain = pair_form(ker, e, &ExteriorPolicy::ZeroExtension)?;
    let lhs = kap * plain.quad(&u.values) - p.theta * hardy_term(u)?;

    let v: Vec<f64> = g
        .nodes()
        .iter()
        .zip(&u.values)
        .map(|(&r, &ui)| r.powf(alpha) * ui)
        .collect();
    let weighted = pair_form(ker, e - alpha, &ExteriorPolicy::ZeroExtension)?;
    let rhs = kap * weighted.quad(&v);

    let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(REL_FLOOR);
    let mut meta = base_metadata(p, g);
    meta["alpha"] = json!(alpha);
    Ok(CheckReport::build("gsr", lhs, rhs, rel, GSR_TOL, meta))
}

/// Weak form of the weighted Euler–Lagrange equation: with `v = r^alpha u`,
/// test `(c/2) B_alpha(v, psi) = int v^{2*-1} psi r^{-2* alpha} dmu` against
/// ten log-Gaussian bumps spread over the interior. The reported error is the
/// worst bump's; the input should be the Lagrange-normalized solution, so the
/// coefficient of the right side is exactly one.
pub fn weighted_equation_check(u: &RadialFunction, p: &Params) -> Result<CheckReport> {
    p.validate()?;
    p.require_nonlocal()?;
    let g = &u.grid;
    let n = g.len();
    if n < 64 {
        return Err(Error::domain("weak-form check needs at least 64 nodes"));
    }
    let alpha = solve_alpha(p, 1e-13)?.alpha;
    let nf = p.n as f64;
    let tstar = p.two_star();
    let kap = 0.5 * cns_closed(p.n, p.s)? * sphere_area(p.n)?;
    let area = sphere_area(p.n)?;

    let ker = cached_angular_kernel(g, p.s)?;
    let form = pair_form(
        &ker,
        nf - 1.0 - alpha,
        &ExteriorPolicy::PowerLaw {
            beta_in: 0.0,
            beta_out: nf - 2.0 * p.s - 2.0 * alpha,
        },
    )?;

    let nodes = g.nodes();
    let d = g.log_step();
    let v: Vec<f64> = nodes
        .iter()
        .zip(&u.values)
        .map(|(&r, &ui)| r.powf(alpha) * ui)
        .collect();

    // Log-Gaussian test bumps, truncated to vanish at least five cells from
    // both ends so their zero extension is exact in the bilinear form.
    let sigma = 3.0 * d;
    let lo = g.r_min.ln() + 20.0 * d;
    let hi = g.r_max.ln() - 20.0 * d;
    if hi <= lo {
        return Err(Error::domain("grid too narrow to place interior test bumps"));
    }
    let bumps = 10;
    let mut worst = (0.0f64, 0.0f64, 0.0f64); // (rel, lhs, rhs)
    for k in 0..bumps {
        let c = lo + (hi - lo) * (k as f64 + 0.5) / bumps as f64;
        let psi: Vec<f64> = nodes
            .iter()
            .map(|&r| {
                let t = r.ln() - c;
                if t.abs() <= 5.0 * sigma {
                    (-0.5 * (t / sigma) * (t / sigma)).exp()
                } else {
                    0.0
                }
            })
            .collect();
        let lhs = kap * form.bilinear(&v, &psi);
        let rhs: f64 = area
            * g.volume_weights()
                .iter()
                .zip(nodes)
                .zip(&v)
                .zip(&psi)
                .map(|(((&w, &r), &vi), &pi)| {
                    w * r.powf(-tstar * alpha) * vi.abs().powf(tstar - 1.0) * vi.signum() * pi
                })
                .sum::<f64>();
        let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(REL_FLOOR);
        if rel >= worst.0 {
            worst = (rel, lhs, rhs);
        }
    }
    let mut meta = base_metadata(p, g);
    meta["alpha"] = json!(alpha);
    meta["bumps"] = json!(bumps);
    Ok(CheckReport::build(
        "weighted-equation",
        worst.1,
        worst.2,
        worst.0,
        WEIGHTED_TOL,
        meta,
    ))
}

/// Boundedness of `v = r^alpha u` near the origin: over the two innermost
/// decades, `v` may exceed its value at the window's outer edge `100 r_min`
/// by at most ten percent. A genuinely flat `v` passes with margin; a profile
/// whose weighted form still grows inward fails.
pub fn linfty_check(u: &RadialFunction, p: &Params) -> Result<CheckReport> {
    p.validate()?;
    let g = &u.grid;
    let edge_r = 100.0 * g.r_min;
    if edge_r > g.r_max {
        return Err(Error::domain(
            "flatness check needs a grid spanning at least two decades",
        ));
    }
    let alpha = solve_alpha(p, 1e-13)?.alpha;
    let v = |r: f64, ui: f64| r.powf(alpha) * ui;
    let mut peak = f64::NEG_INFINITY;
    for (&r, &ui) in g.nodes().iter().zip(&u.values) {
        if r <= edge_r * (1.0 + 1e-12) {
            peak = peak.max(v(r, ui));
        }
    }
    let edge = v(edge_r, u.value_at_loglinear(edge_r)?);
    if edge <= 0.0 {
        return Err(Error::domain(
            "flatness check needs a positive value at the comparison radius",
        ));
    }
    let rel = peak / edge - 1.0;
    let mut meta = base_metadata(p, g);
    meta["alpha"] = json!(alpha);
    meta["edge_radius"] = json!(edge_r);
    Ok(CheckReport::build("linfty", peak, edge, rel, LINFTY_TOL, meta))
}

/// Two-sided comparison with the model profile: away from the truncation
/// ends, the ratio `u / P_eta` must stay within a factor of ten between its
/// minimum and maximum. Requires strict positivity on the comparison window
/// `[2 r_min, r_max / 2]`.
pub fn sandwich_check(u: &RadialFunction, p: &Params) -> Result<CheckReport> {
    p.validate()?;
    let g = &u.grid;
    let exps = solve_alpha(p, 1e-13)?;
    let model = p_eta(g.clone(), p.s, exps.eta)?;
    let lo = 2.0 * g.r_min * (1.0 - 1e-12);
    let hi = 0.5 * g.r_max * (1.0 + 1e-12);
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    for ((&r, &ui), &mi) in g.nodes().iter().zip(&u.values).zip(&model.values) {
        if r < lo || r > hi {
            continue;
        }
        if ui <= 0.0 {
            return Err(Error::domain(format!(
                "comparison check needs positivity on [2 r_min, r_max / 2]; found {ui} at r = {r}"
            )));
        }
        let ratio = ui / mi;
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
    }
    if !min_ratio.is_finite() {
        return Err(Error::domain("comparison window contains no grid nodes"));
    }
    let spread = max_ratio / min_ratio;
    let mut meta = base_metadata(p, g);
    meta["eta"] = json!(exps.eta);
    Ok(CheckReport::build(
        "sandwich",
        min_ratio,
        max_ratio,
        spread,
        SANDWICH_TOL,
        meta,
    ))
}

/// Weighted Harnack quotient for the flattened profile `v`:
/// `(average of v^q over [r_min, r] against rho^{N-1-2 alpha} drho)^{1/q}`
/// divided by `inf v` over `[r_min, 3r/2]`. The reported error is the
/// relative change under grid doubling (log-linear resampling), so the check
/// passes when the quotient is finite and stable. Requires
/// `1 <= q < N/(N-2s)` and `3r/2 <= r_max`.
pub fn harnack_ratio(v: &RadialFunction, p: &Params, q: f64, r: f64) -> Result<CheckReport> {
    p.validate()?;
    let nf = p.n as f64;
    let q_cap = nf / (nf - 2.0 * p.s);
    if !q.is_finite() || q < 1.0 || q >= q_cap {
        return Err(Error::domain(format!(
            "Harnack exponent must satisfy 1 <= q < {q_cap}, got {q}"
        )));
    }
    let g = &v.grid;
    if !r.is_finite() || r <= g.r_min || 1.5 * r > g.r_max * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "Harnack radius must satisfy r_min < r and 3r/2 <= r_max, got r = {r}"
        )));
    }
    let alpha = solve_alpha(p, 1e-13)?.alpha;

    let coarse = harnack_quotient(v, nf, alpha, q, r)?;
    // Stability probe: the same quotient on a doubled grid, with values
    // transplanted by log-linear interpolation (exact at original nodes).
    let fine_grid = make_grid(g.r_min, g.r_max, 2 * g.len() - 1, g.n)?;
    let fine_values: Vec<f64> = fine_grid
        .nodes()
        .iter()
        .map(|&x| v.value_at_loglinear(x.clamp(g.r_min, g.r_max)))
        .collect::<Result<_>>()?;
    let fine = harnack_quotient(
        &RadialFunction::new(fine_grid, v.s, fine_values)?,
        nf,
        alpha,
        q,
        r,
    )?;

    let rel = (fine - coarse).abs() / coarse.abs().max(REL_FLOOR);
    let mut meta = base_metadata(p, g);
    meta["alpha"] = json!(alpha);
    meta["q"] = json!(q);
    meta["r"] = json!(r);
    Ok(CheckReport::build(
        "harnack",
        coarse,
        fine,
        rel,
        HARNACK_TOL,
        meta,
    ))
}

fn harnack_quotient(v: &RadialFunction, nf: f64, alpha: f64, q: f64, r: f64) -> Result<f64> {
    let g = &v.grid;
    let nodes = g.nodes();
    let d = g.log_step();
    let jmax = nodes.partition_point(|&x| x <= r * (1.0 + 1e-12));
    if jmax < 2 {
        return Err(Error::domain(
            "Harnack radius leaves fewer than two grid nodes inside the ball",
        ));
    }
    let jmax = jmax - 1;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..=jmax {
        let w = if j == 0 || j == jmax { 0.5 * d } else { d };
        let weight = w * nodes[j].powf(nf - 2.0 * alpha);
        let vj = v.values[j];
        if vj < 0.0 {
            return Err(Error::domain(
                "Harnack quotient needs a nonnegative profile",
            ));
        }
        num += weight * vj.powf(q);
        den += weight;
    }
    let mut inf = f64::INFINITY;
    for (&x, &vj) in nodes.iter().zip(&v.values) {
        if x <= 1.5 * r * (1.0 + 1e-12) {
            inf = inf.min(vj);
        }
    }
    if inf <= 0.0 {
        return Err(Error::domain(
            "Harnack quotient needs a strictly positive profile on the enlarged ball",
        ));
    }
    Ok((num / den).powf(1.0 / q) / inf)
}

/// A smooth interior bump vanishing well away from both truncation ends;
/// the canonical input for identity checks that require compact support.
pub fn canonical_bump(grid: &Arc<RadialGrid>, s: f64) -> Result<RadialFunction> {
    let lc = 0.5 * (grid.r_min.ln() + grid.r_max.ln());
    let w = 0.35 * (grid.r_max.ln() - grid.r_min.ln());
    RadialFunction::from_fn(grid.clone(), s, |r| {
        let t = (r.ln() - lc) / w;
        if t.abs() < 1.0 {
            let c = (std::f64::consts::FRAC_PI_2 * t).cos();
            c * c
        } else {
            0.0
        }
    })
}

struct GsrCheck;

impl Check for GsrCheck {
    fn name(&self) -> &'static str {
        "gsr"
    }

    /// The identity needs compact support; profiles that touch the truncation
    /// ends (as solver outputs do) are replaced by the canonical interior
    /// bump, recorded in the metadata.
    fn run(&self, u: &RadialFunction, p: &Params) -> Result<CheckReport> {
        let ker = cached_angular_kernel(&u.grid, p.s)?;
        let n = u.grid.len();
        let pad = 5.min(n);
        let compact = u.values[..pad].iter().all(|&v| v == 0.0)
            && u.values[n - pad..].iter().all(|&v| v == 0.0);
        if compact {
            gsr_check(u, p, &ker)
        } else {
            let bump = canonical_bump(&u.grid, p.s)?;
            let mut report = gsr_check(&bump, p, &ker)?;
            report.metadata["substituted_canonical_bump"] = json!(true);
            Ok(report)
        }
    }
}

struct WeightedEquationCheck;

impl Check for WeightedEquationCheck {
    fn name(&self) -> &'static str {
        "weighted-equation"
    }

    fn run(&self, u: &RadialFunction, p: &Params) -> Result<CheckReport> {
        weighted_equation_check(u, p)
    }
}

struct LinftyCheck;

impl Check for LinftyCheck {
    fn name(&self) -> &'static str {
        "linfty"
    }

    fn run(&self, u: &RadialFunction, p: &Params) -> Result<CheckReport> {
        linfty_check(u, p)
    }
}

struct SandwichCheck;

impl Check for SandwichCheck {
    fn name(&self) -> &'static str {
        "sandwich"
    }

    fn run(&self, u: &RadialFunction, p: &Params) -> Result<CheckReport> {
        sandwich_check(u, p)
    }
}

/// Harnack stability check with a configurable exponent and radius; the
/// radius defaults to the grid's log-center, capped so the enlarged ball
/// stays inside the window.
struct HarnackCheck {
    q: f64,
    r: Option<f64>,
}

impl Check for HarnackCheck {
    fn name(&self) -> &'static str {
        "harnack"
    }

    fn run(&self, u: &RadialFunction, p: &Params) -> Result<CheckReport> {
        let g = &u.grid;
        let r = self
            .r
            .unwrap_or_else(|| (g.r_min * g.r_max).sqrt().min(g.r_max / 1.5 * 0.99));
        let alpha = solve_alpha(p, 1e-13)?.alpha;
        let v = RadialFunction::new(
            g.clone(),
            u.s,
            g.nodes()
                .iter()
                .zip(&u.values)
                .map(|(&x, &ui)| x.powf(alpha) * ui)
                .collect(),
        )?;
        harnack_ratio(&v, p, self.q, r)
    }
}
