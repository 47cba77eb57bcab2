//! Assembly of Hermitian operator matrices for every supported
//! (manifold, connection, basis) combination.

mod circle;
mod product;
mod sphere;
mod torus;

pub use circle::assemble_circle;
pub use product::{assemble_product, combine_product_spectrum};
pub use sphere::{
    assemble_sphere, assemble_sphere_complex_twist, family_endpoints, spinor_laplacian,
    weitzenbock_potential,
};
pub use torus::{assemble_torus_lattice, lattice_zero_threshold};

/// Operators up to this dimension are diagonalized densely by default. Dense
/// complex Hermitian diagonalization costs seconds already near 1000.
pub const DENSE_THRESHOLD: usize = 1000;
