//! Scalar fields on the round sphere S^n: grids, quadrature and covariant derivatives.

mod field;
mod grid;
pub mod quadrature;
pub mod spectral;

pub use field::{aliasing_fraction, covariant_derivatives, integrate, pole_jets, Derivatives, ScalarField, ALIASING_THRESHOLD};
pub use grid::{build_grid, GridMode, SphereGrid};
