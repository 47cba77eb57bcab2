//! Matrix models of twisted Dirac operators on model spin manifolds.
//!
//! The crate assembles finite Hermitian approximations of `D_A` on circles,
//! round spheres, flat tori and products with a circle, computes their
//! low-lying spectra, and checks them against the index formula, the
//! Friedrich, Kirchberg and Hermitian–Einstein eigenvalue bounds, and the
//! eigenvalue flow of a stabilized connection family on the sphere.

pub mod assembly;
pub mod basis;
pub mod bounds;
pub mod bundle;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod halfint;
pub mod index;
pub mod operator;
pub mod quadrature;
pub mod spectrum;

pub use error::{Error, Result};
pub use halfint::HalfInt;
