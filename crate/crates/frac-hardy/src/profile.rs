//! The two-sided comparison profile
//! `P_eta(r) = (r^{1-eta} (1 + r^{2 eta}))^{-(N-2s)/2}`.
//!
//! It decays like `r^{-(1-eta)(N-2s)/2}` at the origin and
//! `r^{-(1+eta)(N-2s)/2}` at infinity, is exactly invariant under the Kelvin
//! transform, and at `eta = 1` reduces to the bubble
//! `(1 + r^2)^{-(N-2s)/2}`. It serves as the solver's initializer and as the
//! envelope in the two-sided sandwich comparison.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{RadialFunction, RadialGrid};

fn validate_eta(eta: f64) -> Result<()> {
    if !(eta.is_finite() && eta > 0.0 && eta <= 1.0) {
        return Err(Error::domain(format!(
            "profile shape parameter must lie in (0, 1], got {eta}"
        )));
    }
    Ok(())
}

/// `ln P_eta(r)`, evaluated in log space so that extreme radii neither
/// overflow nor lose the power-law tails.
pub fn ln_p_eta(eta: f64, n: u32, s: f64, r: f64) -> Result<f64> {
    validate_eta(eta)?;
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::domain(format!("profile radius must be positive, got {r}")));
    }
    let p = (n as f64 - 2.0 * s) / 2.0;
    let t = r.ln();
    let inner = if 2.0 * eta * t > 700.0 {
        2.0 * eta * t
    } else {
        (2.0 * eta * t).exp().ln_1p()
    };
    Ok(-p * ((1.0 - eta) * t + inner))
}

/// Pointwise `P_eta(r)`.
pub fn p_eta_value(eta: f64, n: u32, s: f64, r: f64) -> Result<f64> {
    Ok(ln_p_eta(eta, n, s, r)?.exp())
}

/// `P_eta` sampled on a grid.
pub fn p_eta(grid: Arc<RadialGrid>, s: f64, eta: f64) -> Result<RadialFunction> {
    validate_eta(eta)?;
    let values = grid
        .nodes()
        .iter()
        .map(|&r| p_eta_value(eta, grid.n, s, r))
        .collect::<Result<Vec<_>>>()?;
    RadialFunction::new(grid, s, values)
}
