//! Pseudo-spectral solver for the quasi-incompressible Navier-Stokes/Cahn-Hilliard
//! system of two viscous fluids with different densities, on a periodic
//! two-dimensional domain.
//!
//! The time integrator is a windowed Picard iteration `x <- L^{-1} F(x)`:
//! [`operators`] assembles the frozen-coefficient linear operator `L` and the
//! nonlinear remainder `F`, [`solver`] inverts `L` by implicit Euler marching,
//! and [`picard`] drives the fixed-point loop and window continuation.
//! Everything numeric is generic over [`Real`]; the `*64` aliases below fix
//! the scalar type to `f64`.

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod harness;
pub mod model;
pub mod operators;
pub mod picard;
pub mod reference;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use field::{Grid, ScalarField, VectorField};
pub use model::ModelParams;
pub use scalar::Real;

pub type Grid64 = field::Grid<f64>;
pub type ScalarField64 = field::ScalarField<f64>;
pub type VectorField64 = field::VectorField<f64>;
pub type ModelParams64 = model::ModelParams<f64>;
pub type WindowTrajectory64 = operators::WindowTrajectory<f64>;

pub type Grid32 = field::Grid<f32>;
pub type ScalarField32 = field::ScalarField<f32>;
pub type VectorField32 = field::VectorField<f32>;
