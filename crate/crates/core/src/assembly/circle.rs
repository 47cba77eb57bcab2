use num::complex::Complex64;

use crate::basis::CircleBasis;
use crate::error::Result;
use crate::operator::{BasisInfo, CsrMatrix, OperatorMatrix, Storage};

/// Diagonal circle Dirac operator with entries `2π(k+δ)/L`, ordered by `k`.
pub fn assemble_circle(basis: &CircleBasis) -> Result<OperatorMatrix> {
    let n = basis.dimension();
    let triplets = basis
        .modes()
        .enumerate()
        .map(|(i, k)| (i, i, Complex64::new(basis.frequency(k), 0.0)))
        .collect();
    let info = BasisInfo::CircleFourier {
        k_max: basis.k_max() as usize,
        length: basis.length(),
        offset: basis.offset(),
    };
    Ok(OperatorMatrix::new(Storage::Sparse(CsrMatrix::from_triplets(n, n, triplets)), None, info)?
        .with_provenance(format!("circle L={} offset={}", basis.length(), basis.offset())))
}
