//! Numerical laboratory for the space-time fractional diffusion equation
//! d_t^alpha u = -(-Laplace)^{beta/2} u + p(x) u with 0 < alpha < 1 and
//! 0 < beta <= 2.
//!
//! Three mutually cross-validating solver paths:
//! - Picard iteration on the mild-solution Volterra equation (complex time
//!   supported on the analyticity sector),
//! - Laplace-resolvent solves inverted over a sector contour,
//! - eigenfunction expansion on a bounded interval.
//!
//! On top of the solvers sit long-time decay experiments: log-log slope fits
//! against the t^{-alpha/2} / t^{-alpha} dichotomy, the elliptic-profile gap
//! t^{-2alpha}, a triviality probe, and the H^gamma blow-up mechanism on the
//! interval.

pub mod asymptotics;
pub mod bounded;
pub mod cauchy;
pub mod config;
pub mod error;
pub mod gamma;
pub mod ml;
pub mod quad;
pub mod runner;
pub mod spectral;

pub use error::{Error, Result};
