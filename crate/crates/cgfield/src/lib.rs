//! Numerical toolkit for the complex-geometry description of quantum fields.
//!
//! The crate is organised around six concerns:
//!
//! * [`gamma`] — exact Dirac gamma-matrix algebra over Gaussian rationals:
//!   anticommutators, `gamma5`, the Levi-Civita symbol, triple-product
//!   decomposition and the sixteen-element basis expansion.
//! * [`manifold`] — differential geometry of metric fields over complex
//!   coordinates: holomorphic derivatives, connection, curvature, Ricci
//!   tensor by two independent routes, and the associated identity checks.
//! * [`field_metrics`] — the concrete metric models built from potentials
//!   (U(1), scalar-only, colour product/entangled, U(3)-extended), the
//!   physical-region determinant and region classification.
//! * [`spacetime`] — finite-difference calculus on uniform space-time
//!   grids: E/B extraction, field tensor, Poisson and wave-identity
//!   residuals, mass extraction, current conservation.
//! * [`appendix`] — quadrature verification of the fermion motion-equation
//!   expansion along world-line paths.
//! * [`config`] / [`report`] / [`suites`] — the CLI runner: configuration,
//!   deterministic verification suites and JSON/CSV reporting.

// Tensor work is written as explicit index loops; iterator rewrites of
// `for mu in 0..4` obscure the index bookkeeping the formulas are about.
#![allow(clippy::needless_range_loop)]

pub mod appendix;
pub mod config;
pub mod field_metrics;
pub mod gamma;
pub mod manifold;
pub mod report;
pub mod spacetime;
pub mod suites;
