//! Panel quadrature: Gauss–Legendre rules of fixed order behind a common
//! trait, registered by name so configuration files and the CLI can select
//! one at runtime.

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A quadrature rule applied panel by panel.
///
/// Every variant integrates on a reference interval and is mapped affinely
/// onto each panel; variants are looked up by `name` via [`rule_by_name`].
pub trait PanelRule: Send + Sync {
    fn name(&self) -> &'static str;

    /// Nodes and weights on the reference interval `[-1, 1]`.
    fn points(&self) -> &[(f64, f64)];

    /// Integral of `f` over a single panel `[a, b]`.
    fn integrate(&self, a: f64, b: f64, f: &dyn Fn(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for &(x, w) in self.points() {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

struct GaussLegendre {
    name: &'static str,
    points: Vec<(f64, f64)>,
}

impl PanelRule for GaussLegendre {
    fn name(&self) -> &'static str {
        self.name
    }
    fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

/// Legendre polynomial `P_k` and its derivative at `x` by the three-term
/// recurrence.
fn legendre_and_deriv(k: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for j in 2..=k {
        let jf = j as f64;
        let p_next = ((2.0 * jf - 1.0) * x * p - (jf - 1.0) * p_prev) / jf;
        p_prev = p;
        p = p_next;
    }
    let dp = k as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Gauss–Legendre nodes and weights of order `k` by Newton iteration on the
/// Chebyshev initial guesses; the node set is mirrored so it is exactly
/// symmetric about zero.
fn gauss_legendre_points(k: usize) -> Vec<(f64, f64)> {
    let mut pts = vec![(0.0, 0.0); k];
    for i in 0..(k + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre_and_deriv(k, x);
            let dx = -p / dp;
            x += dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(k, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        pts[i] = (-x, w);
        pts[k - 1 - i] = (x, w);
    }
    if k % 2 == 1 {
        pts[k / 2].0 = 0.0;
    }
    pts
}

static RULES: Lazy<Vec<GaussLegendre>> = Lazy::new(|| {
    [("gl8", 8), ("gl16", 16), ("gl32", 32), ("gl64", 64)]
        .iter()
        .map(|&(name, k)| GaussLegendre {
            name,
            points: gauss_legendre_points(k),
        })
        .collect()
});

/// Names of all registered rules, in registration order.
pub fn rule_names() -> Vec<&'static str> {
    RULES.iter().map(|r| r.name).collect()
}

/// Look up a registered rule by name (`gl8`, `gl16`, `gl32`, `gl64`).
pub fn rule_by_name(name: &str) -> Result<&'static dyn PanelRule> {
    RULES
        .iter()
        .find(|r| r.name == name)
        .map(|r| r as &dyn PanelRule)
        .ok_or_else(|| {
            Error::config(format!(
                "unknown quadrature rule {name:?}; available: {}",
                rule_names().join(", ")
            ))
        })
}

/// The default fixed-order rules used internally.
pub fn gl8() -> &'static dyn PanelRule {
    &RULES[0]
}
pub fn gl16() -> &'static dyn PanelRule {
    &RULES[1]
}
pub fn gl32() -> &'static dyn PanelRule {
    &RULES[2]
}

/// Integrate `f` over `[a, b]` (with `0 < a < b`) on geometrically spaced
/// panels, `per_decade` panels per factor of ten.
pub fn log_panels(rule: &dyn PanelRule, a: f64, b: f64, per_decade: usize, f: &dyn Fn(f64) -> f64) -> f64 {
    debug_assert!(a > 0.0 && b > a);
    let decades = (b / a).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    let ratio = (b / a).powf(1.0 / n as f64);
    let mut acc = 0.0;
    let mut lo = a;
    for j in 0..n {
        let hi = if j + 1 == n { b } else { lo * ratio };
        acc += rule.integrate(lo, hi, f);
        lo = hi;
    }
    acc
}

/// Integrate `f` over `[a, b]` on `n` equal panels.
pub fn linear_panels(rule: &dyn PanelRule, a: f64, b: f64, n: usize, f: &dyn Fn(f64) -> f64) -> f64 {
    let n = n.max(1);
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for j in 0..n {
        let lo = a + h * j as f64;
        let hi = if j + 1 == n { b } else { a + h * (j + 1) as f64 };
        acc += rule.integrate(lo, hi, f);
    }
    acc
}

/// Controls for the integral route to the nonlocal normalization constant:
/// how finely each half-period of the oscillatory factor is subdivided, which
/// panel rule runs on the subdivisions, and where the analytic tail takes
/// over.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Subpanels per half-period of the oscillatory integrand (at least 8).
    pub panels: usize,
    /// Name of the registered panel rule to use.
    pub rule: String,
    /// Radius beyond which the oscillatory integral is replaced by its
    /// integrated-by-parts tail expansion.
    pub truncation_radius: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            panels: 8,
            rule: "gl16".to_string(),
            truncation_radius: 1e4,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.panels < 8 {
            return Err(Error::domain(format!(
                "quadrature spec: panels must be at least 8, got {}",
                self.panels
            )));
        }
        if !self.truncation_radius.is_finite() || self.truncation_radius < 10.0 {
            return Err(Error::domain(format!(
                "quadrature spec: truncation radius must be finite and at least 10, got {}",
                self.truncation_radius
            )));
        }
        rule_by_name(&self.rule)?;
        Ok(())
    }
}
