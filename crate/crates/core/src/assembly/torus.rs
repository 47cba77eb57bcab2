use num::complex::Complex64;

use crate::basis::{LinkField, TorusLattice};
use crate::bundle::{ConnectionKind, ConnectionSpec};
use crate::error::{Error, Result};
use crate::geometry::ModelManifold;
use crate::operator::{BasisInfo, CsrMatrix, OperatorMatrix, Storage};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 2×2 spin matrices `γ₁ = σ_x`, `γ₂ = σ_y` as row-major arrays.
const GAMMA: [[Complex64; 4]; 2] = [
    [Complex64 { re: 0.0, im: 0.0 }, Complex64 { re: 1.0, im: 0.0 }, Complex64 { re: 1.0, im: 0.0 }, Complex64 { re: 0.0, im: 0.0 }],
    [Complex64 { re: 0.0, im: 0.0 }, Complex64 { re: 0.0, im: -1.0 }, Complex64 { re: 0.0, im: 1.0 }, Complex64 { re: 0.0, im: 0.0 }],
];

/// Wilson–Dirac operator on a torus with U(1) links, Hermitized as
/// `H = [[0, D_W], [D_W†, 0]]` with grading `Γ = diag(+I, −I)`.
///
/// ```text
/// D_W ψ(x) = Σ_μ (r/a_μ) ψ(x)
///          + Σ_μ (γ_μ − r)/(2a_μ) · U_μ(x) B ψ(x+μ̂)
///          + Σ_μ (−γ_μ − r)/(2a_μ) · U_μ(x−μ̂)* B ψ(x−μ̂)
/// ```
///
/// `B` is the spin-structure sign on hops across the seam. The singular
/// values of `D_W` approximate the continuum `|λ|`, so each of them appears
/// twice (±) in `H`; the multiplicity factor records this.
pub fn assemble_torus_lattice(conn: &ConnectionSpec, lattice: &TorusLattice) -> Result<OperatorMatrix> {
    let ModelManifold::FlatTorus { lengths, spin } = conn.base() else {
        return Err(Error::Domain(format!("expected a flat torus, got {:?}", conn.base())));
    };
    let degrees: Vec<i32> = match conn.kind() {
        ConnectionKind::TrivialFrame => vec![0; conn.rank()],
        ConnectionKind::ConstantCurvature => conn.bundle().summand_degrees().to_vec(),
        ConnectionKind::Interpolated { .. } => {
            return Err(Error::Domain("the torus backend has no interpolated family".into()))
        }
    };
    let (n1, n2) = (lattice.n1(), lattice.n2());
    let fields: Vec<LinkField> = match lattice.links() {
        Some(links) => {
            if links.len() != degrees.len() {
                return Err(Error::DimensionMismatch { left: links.len(), right: degrees.len() });
            }
            links.to_vec()
        }
        None => degrees.iter().map(|&d| LinkField::landau(n1, n2, d as i64)).collect(),
    };
    for (field, &d) in fields.iter().zip(&degrees) {
        if field.dims() != (n1, n2) {
            return Err(Error::Flux(format!("link field has shape {:?}, lattice is {n1}×{n2}", field.dims())));
        }
        field.check_flux(d as i64)?;
    }

    let a = [lengths[0] / n1 as f64, lengths[1] / n2 as f64];
    let signs = [spin[0].sign(), spin[1].sign()];
    let r = lattice.wilson_r();
    let sites = lattice.sites();
    let half = 2 * sites * degrees.len();
    let mut trip = Vec::with_capacity(2 * half * 9);
    let mass: f64 = a.iter().map(|a| r / a).sum();

    let mut push_dw = |row: usize, col: usize, v: Complex64| {
        // D_W sits in the upper-right block, its adjoint in the lower-left
        trip.push((row, half + col, v));
        trip.push((half + col, row, v.conj()));
    };
    for (b, field) in fields.iter().enumerate() {
        let base = b * 2 * sites;
        let index = |x: usize, y: usize, s: usize| base + 2 * (x * n2 + y) + s;
        for x in 0..n1 {
            for y in 0..n2 {
                for s in 0..2 {
                    push_dw(index(x, y, s), index(x, y, s), c(mass, 0.0));
                }
                for mu in 0..2 {
                    let (fx, fy, wraps_fwd) = if mu == 0 {
                        ((x + 1) % n1, y, x + 1 == n1)
                    } else {
                        (x, (y + 1) % n2, y + 1 == n2)
                    };
                    let (bx, by, wraps_bwd) = if mu == 0 {
                        ((x + n1 - 1) % n1, y, x == 0)
                    } else {
                        (x, (y + n2 - 1) % n2, y == 0)
                    };
                    let u_fwd = if mu == 0 { field.ux(x, y) } else { field.uy(x, y) };
                    let u_bwd = if mu == 0 { field.ux(bx, by) } else { field.uy(bx, by) }.conj();
                    let b_fwd = if wraps_fwd { signs[mu] } else { 1.0 };
                    let b_bwd = if wraps_bwd { signs[mu] } else { 1.0 };
                    let scale = 1.0 / (2.0 * a[mu]);
                    for s in 0..2 {
                        for t in 0..2 {
                            let g = GAMMA[mu][2 * s + t];
                            let wilson = if s == t { c(r, 0.0) } else { c(0.0, 0.0) };
                            let fwd = (g - wilson) * scale * u_fwd * b_fwd;
                            let bwd = (-g - wilson) * scale * u_bwd * b_bwd;
                            if fwd != c(0.0, 0.0) {
                                push_dw(index(x, y, s), index(fx, fy, t), fwd);
                            }
                            if bwd != c(0.0, 0.0) {
                                push_dw(index(x, y, s), index(bx, by, t), bwd);
                            }
                        }
                    }
                }
            }
        }
    }
    let n = 2 * half;
    let mut chirality = vec![1i8; half];
    chirality.extend(std::iter::repeat_n(-1i8, half));
    let info = BasisInfo::TorusLattice {
        n1,
        n2,
        wilson_r: r,
        degrees: degrees.clone(),
    };
    Ok(OperatorMatrix::new(Storage::Sparse(CsrMatrix::from_triplets(n, n, trip)), Some(chirality), info)?
        .with_multiplicity_factor(2)
        .with_provenance(format!(
            "torus {}×{} lattice {n1}×{n2} r_w={r} degrees {degrees:?}",
            lengths[0], lengths[1]
        )))
}

/// Half the smallest predicted nonzero continuum `|λ|` for a torus operator:
/// the first Landau level `√(4π|d|/V)` for nonzero degree, or the smallest
/// nonzero free momentum otherwise.
pub fn lattice_zero_threshold(torus: &ModelManifold, degrees: &[i32]) -> Result<f64> {
    let ModelManifold::FlatTorus { lengths, spin } = torus else {
        return Err(Error::Domain("lattice thresholds are defined on a flat torus".into()));
    };
    let vol = lengths[0] * lengths[1];
    let mut smallest = f64::INFINITY;
    for &d in degrees {
        let level = if d != 0 {
            (4.0 * std::f64::consts::PI * d.unsigned_abs() as f64 / vol).sqrt()
        } else {
            let mut best = f64::INFINITY;
            for k1 in -2i32..=2 {
                for k2 in -2i32..=2 {
                    let p1 = 2.0 * std::f64::consts::PI * (k1 as f64 + spin[0].frequency_offset()) / lengths[0];
                    let p2 = 2.0 * std::f64::consts::PI * (k2 as f64 + spin[1].frequency_offset()) / lengths[1];
                    let m = p1.hypot(p2);
                    if m > 1e-12 {
                        best = best.min(m);
                    }
                }
            }
            best
        };
        smallest = smallest.min(level);
    }
    Ok(0.5 * smallest)
}
