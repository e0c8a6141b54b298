//! Periodic spatial discretization: grid, fields, spectral operators and norms.

pub mod grid;
pub mod norms;
pub mod spectral;
pub mod types;

pub use grid::Grid;
pub use norms::{fractional_sobolev_norm, lp_norm, sobolev_norm};
pub use spectral::{
    bilaplacian, dealias, dealias_vec, div, grad, laplacian, laplacian_vec, leray_project, partial,
    product, spectral_derivative, AnyField, DerivativeMode,
};
pub use types::{Components, ScalarField, VectorField};
