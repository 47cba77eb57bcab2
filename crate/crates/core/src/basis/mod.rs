//! Discretization bases: spin-weighted harmonics on the sphere, a gauged
//! lattice on the torus, Fourier modes on the circle.

mod circle;
mod sphere;
mod torus;
mod wigner;

pub use circle::CircleBasis;
pub use sphere::{eth_coefficient, EthDirection, SphereBasis, SphereMode, ETH_SIGN};
pub use torus::{LinkField, TorusLattice, DEFAULT_WILSON_R};
pub use wigner::{coupling_element, matrix_element, wigner3j};
