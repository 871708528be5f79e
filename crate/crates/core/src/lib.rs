//! Numerical toolkit for forced sublinear Schrödinger equations: validated
//! model data, finite-difference discretisation, the stationary profile
//! solver, self-similar reconstruction, support-localisation diagnostics and
//! time evolution.

// NaN-rejecting `!(x > 0.0)` guards and index loops over banded storage are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod evolution;
pub mod error;
pub mod grid;
pub mod model;
pub mod operator;
pub mod localization;
pub mod profile;
pub mod selfsimilar;

pub use error::{LabError, Result};
pub use grid::{build_grid, ComplexField, Grid, GridKind};
pub use model::{derive_coefficients, exponent_set, uniqueness_radius, validate_params, DerivedCoefficients, ExponentSet, ModelParams, RawParams};
pub use num_complex::Complex64;
pub use profile::{solve_profile, ProfileProblem, ProfileSolution, SolverOptions};
