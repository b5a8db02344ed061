//! Monte Carlo and deterministic tooling for Feynman-Kac representations of
//! Dirichlet problems driven by Feller jump diffusions.
//!
//! The pieces, bottom-up:
//!
//! * [`paths`]: càdlàg path skeletons and the exit operators acting on them.
//! * [`levy`]: stable samplers, process specs and Euler skeletons.
//! * [`geometry`]: domains, membership, boundary sampling, exterior cones.
//! * [`exit`]: stepwise first-exit simulation with crossing refinement.
//! * [`feynman_kac`]: estimators for `v`, the non-stationary `v₁`, `E[e^{-λζ}]`.
//! * [`regularity`]: boundary-point classification (probe + cone rules).
//! * [`pde_oracle`]: closed forms, finite differences, fractional Laplacian
//!   quadrature and the viscosity-property checker.
//!
//! The generator convention used everywhere is
//! `𝓛 = b·∇ − |σ|^α (−Δ)^{α/2}` for stable noise and `b·∇ + (ε²/2)Δ` for
//! Brownian noise. The stable sampler is normalised so that
//! `E[exp(i u·X₁)] = exp(−|u|^α)`, i.e. the constant `c₀` is 1.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod estimate;
pub mod exit;
pub mod feynman_kac;
pub mod field;
pub mod geometry;
pub mod levy;
pub mod parallel;
pub mod paths;
pub mod pde_oracle;
pub mod poly;
pub mod quadrature;
pub mod regularity;

pub use estimate::MCEstimate;
pub use field::Field;
pub use geometry::{Domain, Membership};
pub use levy::{Drift, Noise, ProcessSpec, RngStream};
pub use parallel::McOptions;
pub use paths::{CadlagPath, ExitMode};
