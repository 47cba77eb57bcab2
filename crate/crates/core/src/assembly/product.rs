use std::collections::BTreeMap;

use num::complex::Complex64;

use crate::basis::CircleBasis;
use crate::error::Result;
use crate::operator::{BasisInfo, CsrMatrix, OperatorMatrix, Storage};
use crate::spectrum::{SolverDiagnostics, SolverMethod, SpectrumResult};

use super::circle::assemble_circle;

/// Spectrum of `M × S¹` from the spectra of `M` and `S¹`: every pair of
/// computed eigenvalues `(λ_j, β_k)` contributes `±√(λ_j² + β_k²)`.
///
/// Enumerating signed pairs counts each product eigenvalue once per sign of
/// `λ_j` when `M` is graded, so multiplicities are divided by 2 in that case,
/// and by the multiplicity factors of both inputs. Values at or above the
/// smallest magnitude of either input's top cluster are dropped, since the
/// truncated inputs cannot account for all of their contributions.
pub fn combine_product_spectrum(spec_base: &SpectrumResult, spec_circle: &SpectrumResult) -> SpectrumResult {
    let divisor = if spec_base.is_graded() { 2 } else { 1 }
        * spec_base.multiplicity_factor as usize
        * spec_circle.multiplicity_factor as usize;
    let complete_below = top_cluster_floor(spec_base).min(top_cluster_floor(spec_circle));

    // magnitudes keyed on a 1e-9 grid so equal sums from different pairs
    // land together
    let mut counts: BTreeMap<(u64, bool), (f64, usize)> = BTreeMap::new();
    let snap = 1e-9;
    for &l in &spec_base.eigenvalues {
        for &b in &spec_circle.eigenvalues {
            let v = (l * l + b * b).sqrt();
            if v >= complete_below * (1.0 - 1e-12) {
                continue;
            }
            let key = (v / snap).round() as u64;
            // a zero sum has no sign; both emissions land on +0
            for negative in [key != 0, false] {
                let e = counts.entry((key, negative)).or_insert((if negative { -v } else { v }, 0));
                e.1 += 1;
            }
        }
    }
    let mut values = Vec::new();
    for (_, (v, n)) in counts {
        if n % divisor != 0 {
            log::warn!("product multiplicity {n} of {v} is not divisible by {divisor}");
        }
        let m = n.div_ceil(divisor);
        values.extend(std::iter::repeat_n(v, m));
    }
    let zero_threshold = spec_base.zero_threshold.max(spec_circle.zero_threshold);
    SpectrumResult::from_values(
        values,
        zero_threshold,
        spec_base.cluster_tolerance,
        SolverDiagnostics {
            method: SolverMethod::Combined,
            iterations: 0,
            max_residual: spec_base.diagnostics.max_residual.max(spec_circle.diagnostics.max_residual),
            residual_target: spec_base.diagnostics.residual_target.max(spec_circle.diagnostics.residual_target),
            operator_norm: spec_base.diagnostics.operator_norm.hypot(spec_circle.diagnostics.operator_norm),
        },
    )
}

fn top_cluster_floor(spec: &SpectrumResult) -> f64 {
    let Some(top) = spec.clusters.iter().map(|c| c.value.abs()).reduce(f64::max) else {
        return 0.0;
    };
    spec.clusters
        .iter()
        .enumerate()
        .filter(|(_, c)| (c.value.abs() - top).abs() <= 1e-9 * top.max(1.0))
        .flat_map(|(ci, _)| {
            spec.eigenvalues
                .iter()
                .zip(&spec.cluster_of)
                .filter(move |(_, &k)| k == ci)
                .map(|(v, _)| v.abs())
        })
        .fold(f64::INFINITY, f64::min)
}

/// Direct operator on `M × S¹`.
///
/// Graded base: `H_M ⊗ I + Γ ⊗ B` (odd total dimension, ungraded).
/// Ungraded base: `σ_x ⊗ H_M ⊗ I + σ_y ⊗ I ⊗ B`, graded by `σ_z`.
/// Both square to `H_M² ⊗ I + I ⊗ B²`.
pub fn assemble_product(base: &OperatorMatrix, circle: &CircleBasis) -> Result<OperatorMatrix> {
    let b = assemble_circle(circle)?;
    let nb = base.dimension();
    let nc = b.dimension();
    let beta: Vec<f64> = circle.modes().map(|k| circle.frequency(k)).collect();
    let base_trip = base.triplets();
    let mut trip = Vec::new();
    let info = BasisInfo::Product {
        base: Box::new(base.basis().clone()),
        circle: Box::new(b.basis().clone()),
    };
    let (n, chirality) = match base.chirality() {
        Some(gamma) => {
            let idx = |i: usize, k: usize| i * nc + k;
            for &(r, c, v) in &base_trip {
                for k in 0..nc {
                    trip.push((idx(r, k), idx(c, k), v));
                }
            }
            for (i, &g) in gamma.iter().enumerate() {
                for (k, &bk) in beta.iter().enumerate() {
                    trip.push((idx(i, k), idx(i, k), Complex64::new(g as f64 * bk, 0.0)));
                }
            }
            (nb * nc, None)
        }
        None => {
            let half = nb * nc;
            let idx = |i: usize, k: usize| i * nc + k;
            for &(r, c, v) in &base_trip {
                for k in 0..nc {
                    // σ_x ⊗ H_M
                    trip.push((idx(r, k), half + idx(c, k), v));
                    trip.push((half + idx(r, k), idx(c, k), v));
                }
            }
            for i in 0..nb {
                for (k, &bk) in beta.iter().enumerate() {
                    // σ_y ⊗ B
                    trip.push((idx(i, k), half + idx(i, k), Complex64::new(0.0, -bk)));
                    trip.push((half + idx(i, k), idx(i, k), Complex64::new(0.0, bk)));
                }
            }
            let mut g = vec![1i8; half];
            g.extend(std::iter::repeat_n(-1i8, half));
            (2 * half, Some(g))
        }
    };
    Ok(OperatorMatrix::new(Storage::Sparse(CsrMatrix::from_triplets(n, n, trip)), chirality, info)?
        .with_multiplicity_factor(base.multiplicity_factor())
        .with_provenance(format!("({}) × ({})", base.provenance(), b.provenance())))
}
