//! Problem parameters: dimension, fractional order, Hardy coupling.

use serde::{Deserialize, Serialize};

use crate::constants::lambda_ns;
use crate::error::{Error, Result};

/// Parameters of the doubly critical equation: dimension `N`, fractional
/// order `s`, and Hardy coupling `theta` (absolute, not a fraction of the
/// sharp constant).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: u32,
    pub s: f64,
    pub theta: f64,
}

impl Params {
    pub fn new(n: u32, s: f64, theta: f64) -> Result<Self> {
        let p = Params { n, s, theta };
        p.validate()?;
        Ok(p)
    }

    /// Check `N >= 1`, `0 < s <= 1`, `N > 2s`, and `0 <= theta < Lambda`.
    ///
    /// `s = 1` is admitted so the constants and exponent solvers cover the
    /// classical limit; the kernel-based operations reject it separately.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if !self.s.is_finite() || self.s <= 0.0 || self.s > 1.0 {
            return Err(Error::domain(format!(
                "order s must lie in (0, 1], got {}",
                self.s
            )));
        }
        if self.n as f64 <= 2.0 * self.s {
            return Err(Error::domain(format!(
                "need N > 2s, got N = {}, s = {}",
                self.n, self.s
            )));
        }
        let lambda = lambda_ns(self.n, self.s)?;
        if !self.theta.is_finite() || self.theta < 0.0 || self.theta >= lambda {
            return Err(Error::domain(format!(
                "coupling theta must lie in [0, Lambda) = [0, {lambda}), got {}",
                self.theta
            )));
        }
        Ok(())
    }

    /// Construct from a coupling given as a fraction of the sharp Hardy
    /// constant: `theta = fraction * Lambda_{N,s}`.
    pub fn from_theta_fraction(n: u32, s: f64, fraction: f64) -> Result<Self> {
        if !fraction.is_finite() || !(0.0..1.0).contains(&fraction) {
            return Err(Error::domain(format!(
                "theta fraction must lie in [0, 1), got {fraction}"
            )));
        }
        Params::new(n, s, fraction * lambda_ns(n, s)?)
    }

    /// The critical Sobolev exponent `2N / (N - 2s)`.
    pub fn two_star(&self) -> f64 {
        2.0 * self.n as f64 / (self.n as f64 - 2.0 * self.s)
    }

    /// `N - 2s`, the decay budget shared by the inner and outer exponents.
    pub fn n_minus_2s(&self) -> f64 {
        self.n as f64 - 2.0 * self.s
    }

    /// The sharp Hardy constant for these `N, s`.
    pub fn lambda(&self) -> Result<f64> {
        lambda_ns(self.n, self.s)
    }

    /// Reject `s = 1` for operations built on the singular integral kernel.
    pub fn require_nonlocal(&self) -> Result<()> {
        if self.s >= 1.0 {
            return Err(Error::domain(
                "this operation uses the singular integral kernel and requires s < 1",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_accepts_interior_and_rejects_boundary() {
        assert!(Params::new(3, 0.5, 0.0).is_ok());
        assert!(Params::new(3, 1.0, 0.2).is_ok()); // classical limit allowed
        assert!(Params::new(3, 0.5, 0.63).is_ok()); // just below Lambda = 2/pi
        assert!(Params::new(3, 0.5, 0.6367).is_err()); // at/above Lambda
        assert!(Params::new(3, 0.5, -0.1).is_err());
        assert!(Params::new(1, 0.5, 0.0).is_err()); // N = 2s
        assert!(Params::new(3, 0.0, 0.0).is_err());
        assert!(Params::new(3, 1.2, 0.0).is_err());
        assert!(Params::new(0, 0.5, 0.0).is_err());
    }

    #[test]
    fn theta_fraction_scales_by_lambda() {
        let p = Params::from_theta_fraction(3, 0.5, 0.5).unwrap();
        assert!((p.theta - 1.0 / std::f64::consts::PI).abs() < 1e-14);
        assert!(Params::from_theta_fraction(3, 0.5, 1.0).is_err());
    }

    #[test]
    fn critical_exponent_values() {
        let p = Params::new(3, 0.5, 0.0).unwrap();
        assert_eq!(p.two_star(), 3.0);
        let q = Params::new(4, 1.0, 0.0).unwrap();
        assert_eq!(q.two_star(), 4.0);
    }

    #[test]
    fn nonlocal_guard_rejects_classical_order() {
        assert!(Params::new(3, 1.0, 0.0).unwrap().require_nonlocal().is_err());
        assert!(Params::new(3, 0.5, 0.0).unwrap().require_nonlocal().is_ok());
    }
}
