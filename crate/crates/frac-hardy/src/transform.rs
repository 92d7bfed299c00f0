//! The Kelvin transform and the radial decreasing rearrangement.

use crate::error::{Error, Result};
use crate::grid::{make_grid, RadialFunction};

/// Kelvin transform `u*(r) = r^{2s-N} u(1/r)`, returned on making the
/// reciprocal grid `[1/r_max, 1/r_min]` (same node count, same order `s`).
pub fn kelvin_transform(u: &RadialFunction) -> Result<RadialFunction> {
    let g = &u.grid;
    let n = g.len();
    let grid = make_grid(1.0 / g.r_max, 1.0 / g.r_min, n, g.n)?;
    let power = 2.0 * u.s - g.n as f64;
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| r.powf(power) * u.values[n - 1 - i])
        .collect();
    RadialFunction::new(grid, u.s, values)
}

/// Mass-block transport onto nonincreasing order: sort values descending and
/// give each node the sorted value whose cumulative mass block covers the
/// node's own mass midpoint. Exactly equimeasurable as a step function on
/// mass blocks, identity on already-nonincreasing input.
pub(crate) fn transport_nonincreasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());

    let mut mass_sorted = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &k in &order {
        acc += weights[k];
        mass_sorted.push(acc);
    }
    let mut out = Vec::with_capacity(n);
    let mut mass = 0.0;
    for j in 0..n {
        mass += weights[j];
        let mid = mass - 0.5 * weights[j];
        let k = mass_sorted.partition_point(|&m| m < mid).min(n - 1);
        out.push(values[order[k]]);
    }
    out
}

/// Decreasing rearrangement with respect to the `r^{N-1} dr` cell measure.
pub fn decreasing_rearrangement(u: &RadialFunction) -> Result<RadialFunction> {
    if u.values.iter().any(|&v| v < 0.0) {
        return Err(Error::domain(
            "decreasing rearrangement requires a nonnegative function",
        ));
    }
    let values = transport_nonincreasing(&u.values, u.grid.volume_weights());
    RadialFunction::new(u.grid.clone(), u.s, values)
}
