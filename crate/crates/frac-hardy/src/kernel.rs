//! The angular reduction of the singular kernel `|x - y|^{-(N+2s)}`: for
//! radial functions the double integral over `R^N x R^N` collapses to radii
//! against
//!
//! `K(r, rho) = |S^{N-2}| int_0^pi sin^{N-2}(phi) (r^2 + rho^2 - 2 r rho cos phi)^{-(N+2s)/2} dphi`,
//!
//! with the point-pair convention `K = |r-rho|^{-1-2s} + (r+rho)^{-1-2s}` in
//! dimension one. Dimensions 1 and 3 have closed forms; the rest use panel
//! quadrature graded into the `phi = 0` near-singularity with refinement by
//! doubling.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::quad::{self};
use crate::special::{gamma, sphere_area};

/// Leading coefficient of the near-diagonal expansion
/// `K(r, rho) ~ amp * (r rho)^{-(N-1)/2} |r - rho|^{-1-2s}`:
/// `amp = |S^{N-2}| Gamma((N-1)/2) Gamma(s + 1/2) / (2 Gamma((N+2s)/2))`,
/// degenerating to `1` in dimension one.
pub fn near_diagonal_amplitude(n: u32, s: f64) -> Result<f64> {
    if n == 1 {
        return Ok(1.0);
    }
    Ok(sphere_area(n - 1)? * gamma((n as f64 - 1.0) / 2.0)? * gamma(s + 0.5)?
        / (2.0 * gamma((n as f64 + 2.0 * s) / 2.0)?))
}

fn validate_kernel_args(n: u32, s: f64, r: f64, rho: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("kernel dimension must be at least 1"));
    }
    if !s.is_finite() || s <= 0.0 || s >= 1.0 {
        return Err(Error::domain(format!(
            "kernel order s must lie in (0, 1), got {s}"
        )));
    }
    if !(r.is_finite() && rho.is_finite()) || r <= 0.0 || rho <= 0.0 {
        return Err(Error::domain(format!(
            "kernel radii must be positive and finite, got r = {r}, rho = {rho}"
        )));
    }
    if r == rho {
        return Err(Error::domain(
            "kernel diverges on the diagonal r = rho; diagonal entries are handled by the singular-cell rule",
        ));
    }
    Ok(())
}

/// Dimension 3: the polar integral is elementary,
/// `K = 2 pi / ((1+2s) r rho) * (|r-rho|^{-1-2s} - (r+rho)^{-1-2s})`.
/// For widely separated radii the difference of powers cancels, so a small
/// odd-order series in `min/max` replaces it there.
fn kernel_value_dim3(s: f64, r: f64, rho: f64) -> f64 {
    let q = 1.0 + 2.0 * s;
    let hi = r.max(rho);
    let x = r.min(rho) / hi;
    let diff = if x < 0.05 {
        // (1-x)^{-q} - (1+x)^{-q} = 2 sum_{k odd} (q)_k / k! x^k, truncated
        // where the next term falls below rounding.
        let mut poch = q; // (q)_k
        let mut fact = 1.0_f64;
        let mut term_sum = 0.0;
        let mut xk = x;
        for k in 1..=9u32 {
            if k % 2 == 1 {
                term_sum += poch / fact * xk;
            }
            poch *= q + k as f64;
            fact *= (k + 1) as f64;
            xk *= x;
        }
        2.0 * term_sum * hi.powf(-q)
    } else {
        (hi * (1.0 - x)).powf(-q) - (hi * (1.0 + x)).powf(-q)
    };
    2.0 * std::f64::consts::PI / (q * r * rho) * diff
}

/// General dimension: adaptive panel quadrature of the polar integral in the
/// normalized variable `x = min/max`, refined by doubling until two levels
/// agree to 1e-8 relative.
fn kernel_value_quadrature(n: u32, s: f64, r: f64, rho: f64) -> Result<f64> {
    let hi = r.max(rho);
    let lo = r.min(rho);
    let x = lo / hi;
    let p = (n as f64 + 2.0 * s) / 2.0;
    // 1 + x^2 - 2x cos(phi) written as (1-x)^2 + 4x sin^2(phi/2): every term
    // is positive, so near-diagonal pairs lose no digits to cancellation.
    let gap = (hi - lo) / hi;
    let f = move |phi: f64| {
        let half_sin = (0.5 * phi).sin();
        phi.sin().powi(n as i32 - 2) * (gap * gap + 4.0 * x * half_sin * half_sin).powf(-p)
    };
    let pi = std::f64::consts::PI;

    let value_at = |level: u32| -> f64 {
        if x <= 0.9 {
            // No near-singularity: equal panels of a high-order rule.
            let base = if x <= 0.5 { 1 } else { 4 };
            quad::linear_panels(quad::gl32(), 0.0, pi, base << level, &f)
        } else {
            // The integrand peaks at phi ~ gap; geometric panels from far
            // below that scale resolve the transition at any grading level.
            let phi0 = 1e-8 * gap.min(1.0);
            quad::log_panels(quad::gl16(), phi0, pi, 4 << level, &f)
        }
    };

    let mut prev = value_at(0);
    for level in 1..=8 {
        let cur = value_at(level);
        if (cur - prev).abs() <= 1e-8 * cur.abs() {
            return Ok(sphere_area(n - 1)? * hi.powf(-(n as f64 + 2.0 * s)) * cur);
        }
        prev = cur;
    }
    Err(Error::non_convergence(format!(
        "polar kernel quadrature did not stabilize for N = {n}, s = {s}, r = {r}, rho = {rho}"
    )))
}

/// The radial kernel `K(r, rho)` for distinct positive radii.
pub fn kernel_value(n: u32, s: f64, r: f64, rho: f64) -> Result<f64> {
    validate_kernel_args(n, s, r, rho)?;
    match n {
        1 => {
            let q = -(1.0 + 2.0 * s);
            Ok((r - rho).abs().powf(q) + (r + rho).powf(q))
        }
        3 => Ok(kernel_value_dim3(s, r, rho)),
        _ => kernel_value_quadrature(n, s, r, rho),
    }
}

/// The kernel tabulated on all node pairs of a grid: a symmetric matrix with
/// zeros on the diagonal (diagonal couplings are reconstructed analytically
/// by the quadratic-form assembly, never read from the table).
pub struct AngularKernel {
    pub grid: Arc<RadialGrid>,
    pub s: f64,
    table: Vec<f64>,
}

/// Tabulate the kernel for every pair of grid nodes. Rows are computed in
/// parallel; each entry is an independent deterministic evaluation, so the
/// table does not depend on thread scheduling.
pub fn angular_kernel(grid: &Arc<RadialGrid>, s: f64) -> Result<AngularKernel> {
    if !s.is_finite() || s <= 0.0 || s >= 1.0 {
        return Err(Error::domain(format!(
            "kernel order s must lie in (0, 1), got {s}"
        )));
    }
    let n = grid.len();
    let nodes = grid.nodes();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| kernel_value(grid.n, s, nodes[i], nodes[j]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = vec![0.0; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, value) in row.into_iter().enumerate() {
            let j = i + 1 + offset;
            table[i * n + j] = value;
            table[j * n + i] = value;
        }
    }
    Ok(AngularKernel {
        grid: grid.clone(),
        s,
        table,
    })
}

type KernelKey = (u32, usize, u64, u64, u64);

static KERNEL_CACHE: Lazy<Mutex<HashMap<KernelKey, Arc<AngularKernel>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Memoized [`angular_kernel`]: tabulation is quadratic in the node count and
/// is reused heavily by solver runs and verification suites on shared grids.
pub fn cached_angular_kernel(grid: &Arc<RadialGrid>, s: f64) -> Result<Arc<AngularKernel>> {
    let key = (
        grid.n,
        grid.len(),
        grid.r_min.to_bits(),
        grid.r_max.to_bits(),
        s.to_bits(),
    );
    if let Some(hit) = KERNEL_CACHE.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let built = Arc::new(angular_kernel(grid, s)?);
    let mut cache = KERNEL_CACHE.lock().unwrap();
    if cache.len() >= 32 {
        cache.clear();
    }
    cache.insert(key, built.clone());
    Ok(built)
}

impl AngularKernel {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.grid.len() + j]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Check that a function lives on this kernel's grid.
    pub fn check_grid(&self, other: &RadialGrid) -> Result<()> {
        if !self.grid.same_grid(other) {
            return Err(Error::domain(
                "function grid does not match the kernel's tabulation grid",
            ));
        }
        Ok(())
    }
}

/// Expose the quadrature route for cross-validation in tests.
#[cfg(test)]
pub(crate) fn kernel_value_by_quadrature(n: u32, s: f64, r: f64, rho: f64) -> Result<f64> {
    validate_kernel_args(n, s, r, rho)?;
    kernel_value_quadrature(n, s, r, rho)
}
