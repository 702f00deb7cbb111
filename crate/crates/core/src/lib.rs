//! Semiclassical Schrodinger dynamics in one space dimension.
//!
//! The crate evolves highly oscillatory wavefunctions `psi = a0 exp(i S0 / eps)`
//! with a spectral split-step method, integrates Bohmian trajectories against
//! the resulting quantum velocity field, computes the classical Hamiltonian
//! ray flow with caustic detection, builds the free-case stationary-phase
//! (multi-branch) approximation, and compares the limiting Bohmian and Wigner
//! phase-space measures.
//!
//! Modules map onto the main subsystems:
//!
//! * [`spectral`]  - periodic grid, FFT transforms, spectral derivative and
//!   trigonometric evaluation at arbitrary points;
//! * [`potential`] / [`wkb`] - closed-form potentials and WKB initial data;
//! * [`solver`]    - Strang split-step propagator plus conserved quantities;
//! * [`classical`] - Hamiltonian ray flow, Jacobians, caustic onset,
//!   single-phase WKB reconstruction;
//! * [`bohmian`]   - quantum trajectories, push-forward and non-crossing
//!   audits, deviation-from-classical statistics;
//! * [`measures`]  - stationary points, branch sets, multi-phase evaluation
//!   with a quadrature oracle, limiting Bohmian/Wigner measures and a
//!   numerical Wigner transform;
//! * [`scenario`]  - the catalog of runnable case studies.

// `!(x > 0.0)` deliberately rejects NaN along with the out-of-range values;
// the positively-phrased comparison would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bohmian;
pub mod classical;
pub mod error;
pub mod measures;
pub mod potential;
pub mod scenario;
pub mod solver;
pub mod spectral;
pub mod wkb;

pub use error::CoreError;
pub use num_complex::Complex64;

/// Shorthand used across the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
