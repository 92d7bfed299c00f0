//! Logarithmic radial grids and functions sampled on them, with a CSV
//! serialization that round-trips exactly.

use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::io::atomic_write;

/// A geometric grid on `[r_min, r_max]` together with the volume weights of
/// log-trapezoid quadrature in dimension `n`: integrals of radial profiles
/// against `r^{N-1} dr` become `sphere_area(N) * sum_i w_i f(r_i)` with
/// `w_i = r_i^N * h_i`, where `h_i` is the log step (halved at the ends).
#[derive(Clone, Debug)]
pub struct RadialGrid {
    pub n: u32,
    pub r_min: f64,
    pub r_max: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Build a log-spaced grid with `count >= 3` nodes from `r_min` to `r_max`
/// inclusive, carrying dimension-`n` volume weights.
pub fn make_grid(r_min: f64, r_max: f64, count: usize, n: u32) -> Result<Arc<RadialGrid>> {
    if n == 0 {
        return Err(Error::domain("grid dimension must be at least 1"));
    }
    if !(r_min.is_finite() && r_max.is_finite()) || r_min <= 0.0 || r_max <= r_min {
        return Err(Error::domain(format!(
            "need 0 < r_min < r_max, got r_min = {r_min}, r_max = {r_max}"
        )));
    }
    if count < 3 {
        return Err(Error::domain(format!("grid needs at least 3 nodes, got {count}")));
    }
    let d = (r_max / r_min).ln() / (count - 1) as f64;
    let nodes: Vec<f64> = (0..count)
        .map(|i| {
            if i == count - 1 {
                r_max
            } else {
                r_min * (d * i as f64).exp()
            }
        })
        .collect();
    let weights = nodes
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let h = if i == 0 || i == count - 1 { d / 2.0 } else { d };
            r.powi(n as i32) * h
        })
        .collect();
    Ok(Arc::new(RadialGrid {
        n,
        r_min,
        r_max,
        nodes,
        weights,
    }))
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Log-trapezoid volume weights `r_i^N h_i` (sphere area not included).
    pub fn volume_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Uniform spacing in `log r`.
    pub fn log_step(&self) -> f64 {
        (self.r_max / self.r_min).ln() / (self.len() - 1) as f64
    }

    /// Whether two grids describe the same discretization.
    pub fn same_grid(&self, other: &RadialGrid) -> bool {
        fn close(a: f64, b: f64) -> bool {
            (a - b).abs() <= 1e-14 * a.abs().max(b.abs())
        }
        self.n == other.n
            && self.len() == other.len()
            && close(self.r_min, other.r_min)
            && close(self.r_max, other.r_max)
    }

    /// Index of the node nearest to `r` in log distance.
    pub fn nearest_index(&self, r: f64) -> usize {
        if r <= self.r_min {
            return 0;
        }
        if r >= self.r_max {
            return self.len() - 1;
        }
        let idx = ((r / self.r_min).ln() / self.log_step()).round() as usize;
        idx.min(self.len() - 1)
    }
}

/// A real-valued function sampled on a radial grid, tagged with the
/// fractional order `s` of the problem it belongs to (the order travels with
/// the samples through serialization, so norms with `s`-dependent exponents
/// need no extra argument). The monotone flag records whether the samples are
/// nonincreasing; it is recomputed on construction.
#[derive(Clone, Debug)]
pub struct RadialFunction {
    pub grid: Arc<RadialGrid>,
    pub s: f64,
    pub values: Vec<f64>,
    pub monotone: bool,
}

impl RadialFunction {
    pub fn new(grid: Arc<RadialGrid>, s: f64, values: Vec<f64>) -> Result<Self> {
        if !s.is_finite() || s <= 0.0 || s > 1.0 {
            return Err(Error::domain(format!(
                "fractional order s must lie in (0, 1], got {s}"
            )));
        }
        if values.len() != grid.len() {
            return Err(Error::domain(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite sample value {bad}")));
        }
        let monotone = values.windows(2).all(|w| w[0] >= w[1]);
        Ok(RadialFunction {
            grid,
            s,
            values,
            monotone,
        })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, s: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        RadialFunction::new(grid, s, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Evaluate by linear interpolation in `log r`; `r` must lie inside the
    /// grid range.
    pub fn value_at_loglinear(&self, r: f64) -> Result<f64> {
        let g = &self.grid;
        if !(g.r_min..=g.r_max).contains(&r) {
            return Err(Error::domain(format!(
                "radius {r} outside grid range [{}, {}]",
                g.r_min, g.r_max
            )));
        }
        let d = g.log_step();
        let t = (r / g.r_min).ln() / d;
        let i = (t.floor() as usize).min(g.len() - 2);
        let frac = t - i as f64;
        Ok(self.values[i] * (1.0 - frac) + self.values[i + 1] * frac)
    }
}

/// Render a float with 17 significant digits, enough for `f64` to
/// round-trip exactly through text.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialize a radial function to CSV: one metadata header line with
/// `N, s, r_min, r_max, count`, a column header, then `r,value` rows.
pub fn write_radial_csv(path: &Path, u: &RadialFunction) -> Result<()> {
    let g = &u.grid;
    let mut out = String::new();
    out.push_str(&format!(
        "N={},s={},r_min={},r_max={},count={}\n",
        g.n,
        fmt_f64(u.s),
        fmt_f64(g.r_min),
        fmt_f64(g.r_max),
        g.len()
    ));
    out.push_str("r,value\n");
    for (r, v) in g.nodes().iter().zip(&u.values) {
        out.push_str(&format!("{},{}\n", fmt_f64(*r), fmt_f64(*v)));
    }
    atomic_write(path, out.as_bytes())
}

/// Parse a CSV produced by [`write_radial_csv`], reconstructing the grid from
/// the header and validating that the stored radii match it.
pub fn read_radial_csv(path: &Path) -> Result<RadialFunction> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::config(format!("{}: empty file", path.display())))?;

    let mut n = None;
    let mut s = None;
    let mut r_min = None;
    let mut r_max = None;
    let mut count = None;
    for field in header.split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::config(format!("malformed header field {field:?}")))?;
        match key.trim() {
            "N" => n = Some(value.parse::<u32>().map_err(|e| Error::config(format!("N: {e}")))?),
            "s" => s = Some(parse_float(value, "s")?),
            "r_min" => r_min = Some(parse_float(value, "r_min")?),
            "r_max" => r_max = Some(parse_float(value, "r_max")?),
            "count" => {
                count = Some(
                    value
                        .parse::<usize>()
                        .map_err(|e| Error::config(format!("count: {e}")))?,
                )
            }
            other => return Err(Error::config(format!("unknown header key {other:?}"))),
        }
    }
    let (n, s, r_min, r_max, count) = match (n, s, r_min, r_max, count) {
        (Some(a), Some(b), Some(c), Some(d), Some(e)) => (a, b, c, d, e),
        _ => {
            return Err(Error::config(format!(
                "header must carry N, s, r_min, r_max, count; got {header:?}"
            )))
        }
    };

    let columns = lines
        .next()
        .ok_or_else(|| Error::config("missing column header line"))?;
    if columns.trim() != "r,value" {
        return Err(Error::config(format!(
            "expected column header \"r,value\", got {columns:?}"
        )));
    }

    let grid = make_grid(r_min, r_max, count, n)?;
    let mut values = Vec::with_capacity(count);
    for (row_idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (r_txt, v_txt) = line
            .split_once(',')
            .ok_or_else(|| Error::config(format!("row {}: expected two columns", row_idx + 3)))?;
        let r = parse_float(r_txt, "r")?;
        let v = parse_float(v_txt, "value")?;
        if values.len() >= count {
            return Err(Error::config(format!(
                "more data rows than the declared count {count}"
            )));
        }
        let expected = grid.nodes()[values.len()];
        if (r - expected).abs() > 1e-12 * expected {
            return Err(Error::config(format!(
                "row {}: radius {r:e} does not match the grid node {expected:e}",
                row_idx + 3
            )));
        }
        values.push(v);
    }
    if values.len() != count {
        return Err(Error::config(format!(
            "expected {count} data rows, found {}",
            values.len()
        )));
    }
    RadialFunction::new(grid, s, values)
}

fn parse_float(text: &str, what: &str) -> Result<f64> {
    let v = text
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::config(format!("{what}: {e}")))?;
    if !v.is_finite() {
        return Err(Error::config(format!("{what}: non-finite value {v}")));
    }
    Ok(v)
}
