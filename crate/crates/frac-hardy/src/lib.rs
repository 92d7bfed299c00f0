//! Radial numerics for the doubly critical fractional Hardy–Sobolev
//! equation: the sharp Hardy constant and normalization constants of the
//! fractional Laplacian, the inner/outer decay exponents induced by a Hardy
//! coupling, discrete quadratic forms and functionals on truncated log grids,
//! a pointwise fractional Laplacian for radial profiles, a variational solver
//! for the critical quotient, and a registry of structural verification
//! checks.
//!
//! Everything is radial: functions live on log-spaced grids
//! ([`RadialGrid`], [`RadialFunction`]), the singular kernel is reduced to an
//! angular integral once per node pair ([`AngularKernel`]), and all integrals
//! over `R^N` collapse to weighted sums over radii. The two ends of every
//! computation are scale covariance (grids shift in log space without
//! changing any quotient) and explicit tail control (truncated windows are
//! completed by power-law or zero extensions, never silently dropped).

pub mod checks;
pub mod constants;
pub mod error;
pub mod exponents;
pub mod forms;
pub mod fraclap;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod params;
pub mod profile;
pub mod quad;
pub mod solver;
pub mod special;
pub mod transform;

pub use checks::{
    canonical_bump, gsr_check, harnack_ratio, linfty_check, sandwich_check, standard_checks,
    weighted_equation_check, Check, CheckReport,
};
pub use constants::{cns_closed, cns_integral, lambda_ns, phi_sn, psi_sn};
pub use error::{Error, Result};
pub use exponents::{local_eta, s_to_one_consistency, solve_alpha, ExponentResult};
pub use forms::{
    build_pair_form, critical_norm, hardy_term, morrey_norm, pair_form, quadratic_form,
    quotient_q, seminorm_sq, ExteriorPolicy, PairForm,
};
pub use fraclap::frac_lap_radial;
pub use grid::{
    fmt_f64, make_grid, read_radial_csv, write_radial_csv, RadialFunction, RadialGrid,
};
pub use kernel::{
    angular_kernel, cached_angular_kernel, kernel_value, near_diagonal_amplitude, AngularKernel,
};
pub use params::Params;
pub use profile::{ln_p_eta, p_eta, p_eta_value};
pub use solver::{
    el_residual, fit_slopes, lagrange_normalize, maximize_q, SolveConfig, SolveReport,
    SolveSummary, TraceRow,
};
pub use transform::{decreasing_rearrangement, kelvin_transform};
