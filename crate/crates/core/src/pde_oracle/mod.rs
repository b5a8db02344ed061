//! Deterministic ground truth: closed forms, a finite-difference solver,
//! fractional-Laplacian quadrature, generator evaluation and a
//! counterexample search for the viscosity inequalities.

pub mod closed_form;
pub mod fd;
pub mod fraclap;
pub mod generator;
pub mod grid;
pub mod testfn;
pub mod viscosity;

use thiserror::Error;

use crate::feynman_kac::FkError;
use crate::geometry::GeometryError;
use crate::levy::LevyError;

pub use closed_form::{closed_form_v0, closed_form_v_eps, example15_is_regular, example15_v, example15_zeta};
pub use fd::fd_solve_1d;
pub use fraclap::{frac_laplacian, stable_constant, FracLapOptions};
pub use generator::{g_value, g_value_nonstationary, generator_apply, Equation, Hamiltonian};
pub use grid::{Axis, GridFunction};
pub use testfn::TestFunction;
pub use viscosity::{check_viscosity_point, CheckMode, CheckerConfig, ViscosityReport};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("outside the domain of the formula: {0}")]
    DomainViolation(String),
    #[error("tridiagonal system is singular")]
    SingularSystem,
    #[error("far cutoff {cutoff} leaves a tail bound of {bound:e}, above the tolerance {tolerance:e}; raise the cutoff")]
    CutoffTooTight { cutoff: f64, bound: f64, tolerance: f64 },
    #[error("grid: {0}")]
    Grid(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Problem(#[from] FkError),
}
