use std::collections::HashMap;
use std::f64::consts::PI;

use num::complex::Complex64;

use crate::basis::{eth_coefficient, matrix_element, EthDirection, SphereBasis, SphereMode};
use crate::bundle::{family_coupling_strength, he_constant, ConnectionKind, ConnectionSpec};
use crate::error::{Error, Result};
use crate::geometry::ModelManifold;
use crate::halfint::HalfInt;
use crate::operator::{BasisInfo, CsrMatrix, OperatorMatrix, Storage};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Index layout of one line-bundle summand: `+` modes of weight `(q−1)/2`
/// followed by `−` modes of weight `(q+1)/2`.
struct ChargeBlock {
    charge: i32,
    offset: usize,
    plus: Vec<SphereMode>,
    minus: Vec<SphereMode>,
}

impl ChargeBlock {
    fn len(&self) -> usize {
        self.plus.len() + self.minus.len()
    }
}

struct Layout {
    blocks: Vec<ChargeBlock>,
    dim: usize,
}

impl Layout {
    fn new(charges: &[i32], basis: &SphereBasis) -> Result<Self> {
        let mut blocks = Vec::with_capacity(charges.len());
        let mut offset = 0;
        for &q in charges {
            let s_plus = HalfInt::from_twice(q - 1);
            let s_minus = HalfInt::from_twice(q + 1);
            for s in [s_plus, s_minus] {
                if !basis.contains_weight(s) {
                    return Err(Error::Truncation(format!(
                        "charge {q} needs spin weight {s}, which the basis lacks"
                    )));
                }
            }
            let block = ChargeBlock {
                charge: q,
                offset,
                plus: basis.modes(s_plus),
                minus: basis.modes(s_minus),
            };
            offset += block.len();
            blocks.push(block);
        }
        Ok(Layout { blocks, dim: offset })
    }

    fn chirality(&self) -> Vec<i8> {
        let mut g = Vec::with_capacity(self.dim);
        for b in &self.blocks {
            g.extend(std::iter::repeat_n(1i8, b.plus.len()));
            g.extend(std::iter::repeat_n(-1i8, b.minus.len()));
        }
        g
    }

    fn info(&self, basis: &SphereBasis) -> BasisInfo {
        BasisInfo::SphereSpectral {
            twice_l_max: basis.l_max().twice(),
            radius: basis.radius(),
            charges: self.blocks.iter().map(|b| b.charge).collect(),
        }
    }
}

fn sphere_radius(base: &ModelManifold, basis: &SphereBasis) -> Result<f64> {
    let r = base
        .radius()
        .ok_or_else(|| Error::Domain(format!("expected a sphere, got {base:?}")))?;
    if (r - basis.radius()).abs() > 1e-14 * r {
        return Err(Error::InvalidParameter(format!(
            "basis radius {} differs from sphere radius {r}",
            basis.radius()
        )));
    }
    Ok(r)
}

/// Ladder entries of one charge block: `H[−(l,m), +(l,m)] = i·raise(s₊, l)`.
fn ladder_triplets(block: &ChargeBlock, r: f64, out: &mut Vec<(usize, usize, Complex64)>) -> Result<()> {
    let minus_index: HashMap<(HalfInt, HalfInt), usize> = block
        .minus
        .iter()
        .enumerate()
        .map(|(i, m)| ((m.l, m.m), block.offset + block.plus.len() + i))
        .collect();
    for (i, mode) in block.plus.iter().enumerate() {
        let Some(&j) = minus_index.get(&(mode.l, mode.m)) else {
            continue;
        };
        let c = eth_coefficient(mode.s, mode.l, EthDirection::Raise, r)?;
        if c != 0.0 {
            let row = block.offset + i;
            out.push((j, row, I * c));
            out.push((row, j, -I * c));
        }
    }
    Ok(())
}

fn ladder_operator(charges: &[i32], basis: &SphereBasis, r: f64) -> Result<(Layout, Vec<(usize, usize, Complex64)>)> {
    let layout = Layout::new(charges, basis)?;
    let mut trip = Vec::new();
    for block in &layout.blocks {
        ladder_triplets(block, r, &mut trip)?;
    }
    Ok((layout, trip))
}

fn build(layout: &Layout, basis: &SphereBasis, trip: Vec<(usize, usize, Complex64)>, provenance: String) -> Result<OperatorMatrix> {
    let n = layout.dim;
    Ok(OperatorMatrix::new(
        Storage::Sparse(CsrMatrix::from_triplets(n, n, trip)),
        Some(layout.chirality()),
        layout.info(basis),
    )?
    .with_provenance(provenance))
}

fn charges_of(conn: &ConnectionSpec) -> Vec<i32> {
    match conn.kind() {
        ConnectionKind::TrivialFrame => vec![0; conn.rank()],
        _ => conn.bundle().summand_degrees().to_vec(),
    }
}

/// Twisted Dirac operator on a sphere in the spin-weighted harmonic basis.
///
/// Constant-curvature and trivial-frame connections give 2×2 ladder blocks
/// per (l, m), exact up to the truncation. The interpolated family is
/// `A_0 + t (A_1 − A_0)` with the endpoints of [`family_endpoints`].
pub fn assemble_sphere(conn: &ConnectionSpec, basis: &SphereBasis) -> Result<OperatorMatrix> {
    let r = sphere_radius(conn.base(), basis)?;
    match conn.kind() {
        ConnectionKind::Interpolated { t } => {
            let (a0, a1) = family_endpoints(conn.base(), basis)?;
            Ok(OperatorMatrix::affine_combination(&a0, &a1, t)?
                .with_provenance(format!("sphere r={r} family t={t} l_max={}", basis.l_max())))
        }
        kind => {
            let charges = charges_of(conn);
            let (layout, trip) = ladder_operator(&charges, basis, r)?;
            let tag = match kind {
                ConnectionKind::TrivialFrame => "trivial_frame",
                _ => "constant_curvature",
            };
            build(&layout, basis, trip, format!("sphere r={r} {tag} {charges:?} l_max={}", basis.l_max()))
        }
    }
}

/// Endpoints `(A_0, A_1)` of the stabilized family on `H ⊕ H⁻¹`.
///
/// `A_1` is the block operator of charges `[+1, −1]`. `A_0 = A_1 + C`, where
/// `C` is Clifford multiplication by the second fundamental form. Its only
/// harmonic component is the weight-0 constant `κ√(4π)·Y₀₀` with `κ = 1/r`,
/// coupling the weight-0 `+` modes of the `+1` summand to the weight-0 `−`
/// modes of the `−1` summand.
pub fn family_endpoints(sphere: &ModelManifold, basis: &SphereBasis) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let r = sphere_radius(sphere, basis)?;
    let (layout, ladder) = ladder_operator(&[1, -1], basis, r)?;
    let a1 = build(&layout, basis, ladder.clone(), format!("sphere r={r} family t=1 l_max={}", basis.l_max()))?;

    let kappa = family_coupling_strength(r);
    let zero = HalfInt::ZERO;
    let beta = [(SphereMode::new(zero, zero, zero), kappa * (4.0 * PI).sqrt())];
    let (q_block, p_block) = (&layout.blocks[0], &layout.blocks[1]);
    let p_minus_start = p_block.offset + p_block.plus.len();
    let mut trip = ladder;
    for (i, a) in q_block.plus.iter().enumerate() {
        for (j, b) in p_block.minus.iter().enumerate() {
            let mut v = 0.0;
            for &(f, amplitude) in &beta {
                if a.m != f.m + b.m || a.s != f.s + b.s {
                    continue;
                }
                v += amplitude * matrix_element(*a, f, *b);
            }
            if v != 0.0 {
                let (row, col) = (q_block.offset + i, p_minus_start + j);
                trip.push((row, col, Complex64::new(v, 0.0)));
                trip.push((col, row, Complex64::new(v, 0.0)));
            }
        }
    }
    let a0 = build(&layout, basis, trip, format!("sphere r={r} family t=0 l_max={}", basis.l_max()))?;
    Ok((a0, a1))
}

/// Complex Dirac operator `√2(∂̄ + ∂̄*)` on `L`-valued forms, in the same
/// mode ordering as the real twist by `E = L ⊗ K^{−1/2}`: `+` modes carry
/// weight `deg L / 2`, `−` modes weight `deg L / 2 + 1`, and `∂̄*` acts by the
/// lowering ladder.
pub fn assemble_sphere_complex_twist(line_degree: i32, sphere: &ModelManifold, basis: &SphereBasis) -> Result<OperatorMatrix> {
    let r = sphere_radius(sphere, basis)?;
    let s_plus = HalfInt::from_twice(line_degree);
    let s_minus = HalfInt::from_twice(line_degree + 2);
    for s in [s_plus, s_minus] {
        if !basis.contains_weight(s) {
            return Err(Error::Truncation(format!(
                "line degree {line_degree} needs spin weight {s}, which the basis lacks"
            )));
        }
    }
    let plus = basis.modes(s_plus);
    let minus = basis.modes(s_minus);
    let np = plus.len();
    let plus_index: HashMap<(HalfInt, HalfInt), usize> =
        plus.iter().enumerate().map(|(i, m)| ((m.l, m.m), i)).collect();
    let mut trip = Vec::new();
    for (j, mode) in minus.iter().enumerate() {
        let Some(&i) = plus_index.get(&(mode.l, mode.m)) else {
            continue;
        };
        let c = eth_coefficient(mode.s, mode.l, EthDirection::Lower, r)?;
        if c != 0.0 {
            trip.push((i, np + j, I * c));
            trip.push((np + j, i, -I * c));
        }
    }
    let n = np + minus.len();
    let mut chirality = vec![1i8; np];
    chirality.extend(std::iter::repeat_n(-1i8, minus.len()));
    let info = BasisInfo::SphereComplexTwist {
        twice_l_max: basis.l_max().twice(),
        radius: r,
        line_degree,
    };
    Ok(OperatorMatrix::new(Storage::Sparse(CsrMatrix::from_triplets(n, n, trip)), Some(chirality), info)?
        .with_provenance(format!("sphere r={r} complex twist deg L={line_degree} l_max={}", basis.l_max())))
}

fn diagonal_in_layout<F>(conn: &ConnectionSpec, basis: &SphereBasis, f: F) -> Result<OperatorMatrix>
where
    F: Fn(&SphereMode, i32, i8) -> f64,
{
    if matches!(conn.kind(), ConnectionKind::Interpolated { .. }) {
        return Err(Error::Domain("the family connection has no diagonal Laplacian".into()));
    }
    sphere_radius(conn.base(), basis)?;
    let layout = Layout::new(&charges_of(conn), basis)?;
    let mut trip = Vec::with_capacity(layout.dim);
    for block in &layout.blocks {
        for (i, m) in block.plus.iter().enumerate() {
            trip.push((block.offset + i, f(m, block.charge, 1)));
        }
        for (i, m) in block.minus.iter().enumerate() {
            trip.push((block.offset + block.plus.len() + i, f(m, block.charge, -1)));
        }
    }
    let trip = trip.into_iter().map(|(i, v)| (i, i, Complex64::new(v, 0.0))).collect();
    build(&layout, basis, trip, "diagonal".into())
}

/// Connection Laplacian `∇*∇` on the spinor bundle twisted by `conn`, diagonal
/// in the harmonic basis with entries `(l(l+1) − s²)/r²`.
pub fn spinor_laplacian(conn: &ConnectionSpec, basis: &SphereBasis) -> Result<OperatorMatrix> {
    let r2 = basis.radius() * basis.radius();
    diagonal_in_layout(conn, basis, |m, _, _| {
        let (l, s) = (m.l.value(), m.s.value());
        (l * (l + 1.0) - s * s) / r2
    })
}

/// Zeroth-order Weitzenböck term `R/4 − c·Γ`, with `c` the Hermitian–Einstein
/// constant of each summand, so that `D² = ∇*∇ + R/4 − cΓ`.
pub fn weitzenbock_potential(conn: &ConnectionSpec, basis: &SphereBasis) -> Result<OperatorMatrix> {
    let vol = conn.base().volume();
    let quarter_r = conn.base().scalar_curvature_min() / 4.0;
    diagonal_in_layout(conn, basis, |_, q, gamma| {
        quarter_r - he_constant(q as i64, 1, vol) * gamma as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ModelManifold {
        ModelManifold::sphere(1.0).unwrap()
    }

    fn basis_for(charges: &[i32], twice_l_max: i32) -> SphereBasis {
        SphereBasis::for_charges(charges, HalfInt::from_twice(twice_l_max), 1.0).unwrap()
    }

    #[test]
    fn untwisted_is_graded_and_hermitian() {
        let conn = ConnectionSpec::constant_curvature(unit(), vec![0]).unwrap();
        let op = assemble_sphere(&conn, &basis_for(&[0], 9)).unwrap();
        assert_eq!(op.dimension(), 2 * (2 + 4 + 6 + 8 + 10));
        assert_eq!(op.hermiticity_defect(), 0.0);
        assert_eq!(op.chirality_defect(), Some(0.0));
        assert_eq!(op.block_dims(), Some((30, 30)));
    }

    #[test]
    fn missing_weight_is_a_truncation_error() {
        let conn = ConnectionSpec::constant_curvature(unit(), vec![-2]).unwrap();
        let basis = basis_for(&[0], 9);
        assert!(matches!(assemble_sphere(&conn, &basis), Err(Error::Truncation(_))));
    }

    #[test]
    fn family_coupling_is_diagonal_in_lm() {
        let basis = basis_for(&[1, -1], 7);
        let (a0, a1) = family_endpoints(&unit(), &basis).unwrap();
        let c = a0.difference(&a1).unwrap();
        let trip = c.triplets();
        // one entry and its mirror per (l, m) with l ≤ 3
        assert_eq!(trip.len(), 2 * (1 + 3 + 5 + 7));
        assert!(trip.iter().all(|t| (t.2.re - 1.0).abs() < 1e-14 && t.2.im == 0.0));
        assert_eq!(a0.chirality_defect(), Some(0.0));
    }

    #[test]
    fn complex_twist_matches_real_twist_entrywise() {
        for q in [0, -1, -2, 2] {
            let basis = basis_for(&[q], 11);
            let conn = ConnectionSpec::constant_curvature(unit(), vec![q]).unwrap();
            let real = assemble_sphere(&conn, &basis).unwrap().to_dense();
            let cplx = assemble_sphere_complex_twist(q - 1, &unit(), &basis).unwrap().to_dense();
            assert!((real - cplx).iter().all(|z| z.norm() < 1e-15));
        }
    }
}
