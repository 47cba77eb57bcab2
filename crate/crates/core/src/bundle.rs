//! Hermitian bundles over the model manifolds and their compatible connections.
//!
//! Degrees are normalized by `deg = (i/2π) ∫ tr F`, so a constant-curvature
//! (Hermitian–Einstein) line bundle of degree `d` on a surface of area `V` has
//! `F = -i c · vol` with `c = 2π d / V`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Matrix4, SymmetricEigen};
use num::complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ModelManifold;

/// Quadrature resolution used for curvature integrals.
pub const DEGREE_QUADRATURE: usize = 48;
/// Residual above which a curvature integral is rejected as non-integral.
pub const QUANTIZATION_REJECT: f64 = 1e-6;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A Hermitian bundle split as a direct sum of line bundles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleSpec {
    base: ModelManifold,
    summand_degrees: Vec<i32>,
}

impl BundleSpec {
    pub fn new(base: ModelManifold, summand_degrees: Vec<i32>) -> Result<Self> {
        base.validate()?;
        if summand_degrees.is_empty() {
            return Err(Error::InvalidParameter("bundle rank must be at least 1".into()));
        }
        if !base.is_surface() && summand_degrees.iter().any(|&d| d != 0) {
            return Err(Error::Dimension(format!(
                "nonzero degrees need a surface base, got dimension {}",
                base.dimension()
            )));
        }
        Ok(BundleSpec {
            base,
            summand_degrees,
        })
    }

    pub fn trivial(base: ModelManifold, rank: usize) -> Result<Self> {
        Self::new(base, vec![0; rank])
    }

    pub fn base(&self) -> &ModelManifold {
        &self.base
    }

    pub fn summand_degrees(&self) -> &[i32] {
        &self.summand_degrees
    }

    pub fn rank(&self) -> usize {
        self.summand_degrees.len()
    }

    pub fn total_degree(&self) -> i64 {
        self.summand_degrees.iter().map(|&d| d as i64).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConnectionKind {
    /// Direct sum of constant-curvature connections, one per summand degree.
    ConstantCurvature,
    /// The product connection `d` in a global frame.
    TrivialFrame,
    /// `∇_t = ∇^⊕ + (1 - t) β` on `H ⊕ H⁻¹ ≅ C²` over a sphere.
    Interpolated { t: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSpec {
    bundle: BundleSpec,
    kind: ConnectionKind,
}

impl ConnectionSpec {
    pub fn constant_curvature(base: ModelManifold, degrees: Vec<i32>) -> Result<Self> {
        if !base.is_surface() {
            return Err(Error::Dimension(
                "constant-curvature connections need a surface base".into(),
            ));
        }
        Ok(ConnectionSpec {
            bundle: BundleSpec::new(base, degrees)?,
            kind: ConnectionKind::ConstantCurvature,
        })
    }

    pub fn trivial_frame(base: ModelManifold, rank: usize) -> Result<Self> {
        Ok(ConnectionSpec {
            bundle: BundleSpec::trivial(base, rank)?,
            kind: ConnectionKind::TrivialFrame,
        })
    }

    pub fn bundle(&self) -> &BundleSpec {
        &self.bundle
    }

    pub fn kind(&self) -> ConnectionKind {
        self.kind
    }

    pub fn base(&self) -> &ModelManifold {
        &self.bundle.base
    }

    pub fn rank(&self) -> usize {
        self.bundle.rank()
    }

    /// Curvature `F(e₁, e₂)` at a surface point in an oriented orthonormal
    /// frame, as a `rank × rank` skew-Hermitian matrix. Sphere points are
    /// (θ, φ); torus points are (x, y).
    pub fn curvature_at(&self, point: [f64; 2]) -> Result<DMatrix<Complex64>> {
        let base = self.base();
        if !base.is_surface() {
            return Err(Error::Dimension("curvature is evaluated on surfaces only".into()));
        }
        let rank = self.rank();
        match self.kind {
            ConnectionKind::TrivialFrame => Ok(DMatrix::zeros(rank, rank)),
            ConnectionKind::ConstantCurvature => {
                let vol = base.volume();
                Ok(DMatrix::from_fn(rank, rank, |i, j| {
                    if i == j {
                        -I * he_constant(self.bundle.summand_degrees[i] as i64, 1, vol)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                }))
            }
            ConnectionKind::Interpolated { t } => {
                let radius = base.radius().expect("interpolated family lives on a sphere");
                let f = family_curvature_global(t, radius, point);
                Ok(DMatrix::from_fn(2, 2, |i, j| f[(i, j)]))
            }
        }
    }
}

/// The Hermitian–Einstein constant `c` in `ω ⌟ F = -i c 𝕀` for a bundle of the
/// given degree and rank on a surface of area `vol`.
pub fn he_constant(deg: i64, rk: usize, vol: f64) -> f64 {
    2.0 * PI * deg as f64 / (rk as f64 * vol)
}

/// `(i/2π) ∫ tr F` by quadrature, rounded to the nearest integer.
pub fn degree_from_curvature(conn: &ConnectionSpec) -> Result<i64> {
    let (value, _) = curvature_flux(conn, |f| f.trace())?;
    quantize(value)
}

/// Raw (unrounded) flux `(i/2π) ∫ g(F)` for a scalar functional `g` of the
/// curvature matrix, together with the grid size used.
pub fn curvature_flux<G>(conn: &ConnectionSpec, g: G) -> Result<(f64, usize)>
where
    G: Fn(&DMatrix<Complex64>) -> Complex64,
{
    let grid = conn.base().surface_grid(DEGREE_QUADRATURE)?;
    let mut total = Complex64::new(0.0, 0.0);
    for p in &grid {
        let f = conn.curvature_at(p.coords)?;
        total += g(&f) * p.weight;
    }
    let flux = I * total / (2.0 * PI);
    Ok((flux.re, grid.len()))
}

fn quantize(value: f64) -> Result<i64> {
    let rounded = value.round();
    let residual = (value - rounded).abs();
    if residual >= QUANTIZATION_REJECT {
        return Err(Error::Quantization { value, residual });
    }
    if residual >= 1e-8 {
        log::warn!("degree integral {value} has residual {residual:.2e}");
    }
    Ok(rounded as i64)
}

/// The stabilized family on `H ⊕ H⁻¹ ≅ C²` over a sphere at parameter `t`.
pub fn stabilized_family(t: f64, sphere: &ModelManifold) -> Result<ConnectionSpec> {
    if !matches!(sphere, ModelManifold::Sphere { .. }) {
        return Err(Error::Domain("the stabilized family lives on a sphere".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("family parameter t = {t} outside [0, 1]")));
    }
    Ok(ConnectionSpec {
        bundle: BundleSpec::new(sphere.clone(), vec![1, -1])?,
        kind: ConnectionKind::Interpolated { t },
    })
}

/// Stereographic coordinate of the sphere point (θ, φ); θ = 0 maps to z = 0.
pub fn stereographic(theta: f64, phi: f64) -> Complex64 {
    Complex64::from_polar((0.5 * theta).tan(), phi)
}

/// Orthogonal projector onto the tautological line spanned by (1, z), and its
/// partial derivatives in x = Re z and y = Im z.
pub fn tautological_projector(z: Complex64) -> [Matrix2<Complex64>; 3] {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let n = 1.0 + z.norm_sqr();
    let outer = |a: [Complex64; 2], b: [Complex64; 2]| {
        Matrix2::new(a[0] * b[0].conj(), a[0] * b[1].conj(), a[1] * b[0].conj(), a[1] * b[1].conj())
    };
    let v = [one, z];
    let vv = outer(v, v);
    let p = vv / Complex64::new(n, 0.0);
    let mut derivs = [Matrix2::zeros(); 2];
    for (k, (dv, dn)) in [([zero, one], 2.0 * z.re), ([zero, I], 2.0 * z.im)]
        .into_iter()
        .enumerate()
    {
        let num = outer(dv, v) + outer(v, dv);
        derivs[k] = num / Complex64::new(n, 0.0) - vv * Complex64::new(dn / (n * n), 0.0);
    }
    [p, derivs[0], derivs[1]]
}

/// The off-diagonal 1-form `β = (Q - P) dP` in the global frame of C²,
/// evaluated on the orthonormal frame `e₁, e₂` of the sphere of radius `radius`.
pub fn second_fundamental_form(radius: f64, point: [f64; 2]) -> [Matrix2<Complex64>; 2] {
    let z = stereographic(point[0], point[1]);
    let [p, px, py] = tautological_projector(z);
    let q_minus_p = Matrix2::identity() - p * Complex64::new(2.0, 0.0);
    let scale = Complex64::new((1.0 + z.norm_sqr()) / (2.0 * radius), 0.0);
    [q_minus_p * px * scale, q_minus_p * py * scale]
}

/// Curvature `F(e₁, e₂)` of `∇_t = d - t β` in the global frame of C².
/// Uses `dβ = -2 dP ∧ dP` and `[β_x, β_y] = -[P_x, P_y]`, which give
/// `F_xy = (2t - t²) [P_x, P_y]`.
fn family_curvature_global(t: f64, radius: f64, point: [f64; 2]) -> Matrix2<Complex64> {
    let z = stereographic(point[0], point[1]);
    let [_, px, py] = tautological_projector(z);
    let frame = (1.0 + z.norm_sqr()) / (2.0 * radius);
    let comm = px * py - py * px;
    comm * Complex64::new((2.0 * t - t * t) * frame * frame, 0.0)
}

/// Operator norm of Clifford multiplication by `β` on `S ⊗ C²` at a point,
/// with `c(e₁) = iσ_x`, `c(e₂) = iσ_y`. The tautological construction makes
/// this constant over the sphere; it is the coupling strength of the family.
pub fn clifford_beta_norm(radius: f64, point: [f64; 2]) -> f64 {
    let beta = second_fundamental_form(radius, point);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let c1 = Matrix2::new(zero, I, I, zero);
    let c2 = Matrix2::new(zero, one, -one, zero);
    let m = c1.kronecker(&beta[0]) + c2.kronecker(&beta[1]);
    let m: Matrix4<Complex64> = m;
    let eig = SymmetricEigen::new(m);
    eig.eigenvalues.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Coupling strength of the stabilized family on a sphere of the given radius,
/// read off the tautological second fundamental form at the north pole.
pub fn family_coupling_strength(radius: f64) -> f64 {
    clifford_beta_norm(radius, [0.0, 0.0])
}
