//! Pseudo-spectral simulation and analysis of the coupled incompressible
//! Navier–Stokes / Q-tensor liquid-crystal system on a periodic box.
//!
//! The crate is organised bottom-up: [`grid`] and [`field`] carry the data,
//! [`spectral`] and [`mollifier`] provide the linear operators, [`model`]
//! the constitutive terms, [`solver`] the time integration, [`lp`] the
//! Littlewood–Paley toolkit and [`audit`] the numerical checks of the
//! energy identities and the uniqueness functional.

pub mod error;
pub mod field;
pub mod grid;
pub mod init;
pub mod mollifier;
pub mod model;
pub mod snapshot;
pub mod spectral;
pub mod tensor;

pub mod audit;
pub mod lp;
pub mod solver;

pub use error::{Error, Result};
pub use field::{RealField, Shape, SpectralField};
pub use grid::Grid;
pub use model::{ModelParams, QTensorField, VelocityField};
