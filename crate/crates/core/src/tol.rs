//! Default numerical tolerances shared across the crate.

/// Minimum pairwise eigenvalue separation, relative to `max(1, |lambda|max)`.
pub const SEP_MIN: f64 = 1e-6;
/// Eigenpair residual bound, relative to the Frobenius norm of the matrix.
pub const EIG_TOL: f64 = 1e-9;
/// Sylvester residual bound, relative to `|a1| + |a2| + 1`.
pub const SOLVE_TOL: f64 = 1e-10;
/// Factorization residual, relative to the largest coefficient norm.
pub const FACT_TOL: f64 = 1e-8;

/// Lower bound on `Im(tau)`.
pub const TAU_MIN: f64 = 0.05;
pub const SERIES_TOL: f64 = 1e-12;
pub const CONSTRAINT_TOL: f64 = 1e-10;
pub const ZERO_TOL: f64 = 1e-7;
pub const THETA_FACT_TOL: f64 = 1e-6;
