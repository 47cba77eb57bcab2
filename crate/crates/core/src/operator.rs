//! Finite Hermitian matrix models of Dirac operators.

use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compressed sparse row storage for complex matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Builds a CSR matrix from (row, col, value) triplets; duplicates are
    /// summed and exact zeros dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, Complex64)>,
    ) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        };
        m.drop_zeros();
        m
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|v| *v != Complex64::new(0.0, 0.0)) {
            return;
        }
        let triplets: Vec<_> = self.triplets().filter(|t| t.2 != Complex64::new(0.0, 0.0)).collect();
        let mut row_ptr = vec![0usize; self.nrows + 1];
        for t in &triplets {
            row_ptr[t.0 + 1] += 1;
        }
        for r in 0..self.nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        self.col_idx = triplets.iter().map(|t| t.1).collect();
        self.values = triplets.iter().map(|t| t.2).collect();
        self.row_ptr = row_ptr;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn mul_vec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn adjoint(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect(),
        )
    }
}

/// Which discretization produced an operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum BasisInfo {
    SphereSpectral {
        twice_l_max: i32,
        radius: f64,
        /// Line-bundle charge of each block in the basis.
        charges: Vec<i32>,
    },
    SphereComplexTwist {
        twice_l_max: i32,
        radius: f64,
        line_degree: i32,
    },
    TorusLattice {
        n1: usize,
        n2: usize,
        wilson_r: f64,
        degrees: Vec<i32>,
    },
    CircleFourier {
        k_max: usize,
        length: f64,
        offset: f64,
    },
    Product {
        base: Box<BasisInfo>,
        circle: Box<BasisInfo>,
    },
    Generic,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    Dense(DMatrix<Complex64>),
    Sparse(CsrMatrix),
}

/// Hermitian matrix approximation of a twisted Dirac operator.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    storage: Storage,
    /// Diagonal ±1 grading; `None` for odd-dimensional manifolds.
    chirality: Option<Vec<i8>>,
    basis: BasisInfo,
    /// Number of matrix eigenvalues per continuum eigenvalue (the lattice
    /// Hermitization doubles every level).
    multiplicity_factor: u32,
    provenance: String,
}

impl OperatorMatrix {
    pub fn new(storage: Storage, chirality: Option<Vec<i8>>, basis: BasisInfo) -> Result<Self> {
        let n = match &storage {
            Storage::Dense(m) => {
                if m.nrows() != m.ncols() {
                    return Err(Error::DimensionMismatch { left: m.nrows(), right: m.ncols() });
                }
                m.nrows()
            }
            Storage::Sparse(m) => {
                if m.nrows() != m.ncols() {
                    return Err(Error::DimensionMismatch { left: m.nrows(), right: m.ncols() });
                }
                m.nrows()
            }
        };
        if let Some(g) = &chirality {
            if g.len() != n {
                return Err(Error::DimensionMismatch { left: g.len(), right: n });
            }
        }
        Ok(OperatorMatrix {
            storage,
            chirality,
            basis,
            multiplicity_factor: 1,
            provenance: String::new(),
        })
    }

    pub fn from_dense(m: DMatrix<Complex64>, chirality: Option<Vec<i8>>) -> Result<Self> {
        Self::new(Storage::Dense(m), chirality, BasisInfo::Generic)
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn with_multiplicity_factor(mut self, factor: u32) -> Self {
        self.multiplicity_factor = factor;
        self
    }

    pub fn dimension(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.nrows(),
            Storage::Sparse(m) => m.nrows(),
        }
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn chirality(&self) -> Option<&[i8]> {
        self.chirality.as_deref()
    }

    pub fn basis(&self) -> &BasisInfo {
        &self.basis
    }

    pub fn multiplicity_factor(&self) -> u32 {
        self.multiplicity_factor
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Dimensions of the (+, −) chirality subspaces.
    pub fn block_dims(&self) -> Option<(usize, usize)> {
        self.chirality.as_ref().map(|g| {
            let plus = g.iter().filter(|&&s| s > 0).count();
            (plus, g.len() - plus)
        })
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(m) => m.to_dense(),
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        match &self.storage {
            Storage::Dense(m) => {
                let mut out = Vec::new();
                for c in 0..m.ncols() {
                    for r in 0..m.nrows() {
                        let v = m[(r, c)];
                        if v != Complex64::new(0.0, 0.0) {
                            out.push((r, c, v));
                        }
                    }
                }
                out.sort_by_key(|a| (a.0, a.1));
                out
            }
            Storage::Sparse(m) => m.triplets().collect(),
        }
    }

    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        match &self.storage {
            Storage::Dense(m) => {
                let v = m * DVector::from_column_slice(x);
                y.copy_from_slice(v.as_slice());
            }
            Storage::Sparse(m) => m.mul_vec_into(x, y),
        }
    }

    /// `self · block`, column by column.
    pub fn apply_block(&self, block: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        match &self.storage {
            Storage::Dense(m) => m * block,
            Storage::Sparse(m) => {
                let n = m.nrows();
                let mut out = DMatrix::zeros(n, block.ncols());
                for (src, mut dst) in block.column_iter().zip(out.column_iter_mut()) {
                    m.mul_vec_into(src.as_slice(), dst.as_mut_slice());
                }
                out
            }
        }
    }

    /// `max |M - M*|`.
    pub fn hermiticity_defect(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => {
                let mut worst = 0.0f64;
                for r in 0..m.nrows() {
                    for c in r..m.ncols() {
                        worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
                    }
                }
                worst
            }
            Storage::Sparse(m) => m
                .triplets()
                .map(|(r, c, v)| (v - m.get(c, r).conj()).norm())
                .fold(0.0, f64::max),
        }
    }

    /// `max |ΓM + MΓ|`, or `None` without a grading. Entry (r, c) of the
    /// anticommutator is `(γ_r + γ_c) M_rc`.
    pub fn chirality_defect(&self) -> Option<f64> {
        let g = self.chirality.as_ref()?;
        Some(
            self.triplets()
                .into_iter()
                .map(|(r, c, v)| ((g[r] + g[c]) as f64 * v).norm())
                .fold(0.0, f64::max),
        )
    }

    /// `max_r Σ_c |M_rc|`, an upper bound on the operator norm.
    pub fn gershgorin_bound(&self) -> f64 {
        let mut rows = vec![0.0; self.dimension()];
        for (r, _, v) in self.triplets() {
            rows[r] += v.norm();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().iter().all(|(r, c, _)| r == c)
    }

    /// `a + t (b - a)` entrywise; both operands must share a basis.
    pub fn affine_combination(a: &OperatorMatrix, b: &OperatorMatrix, t: f64) -> Result<Self> {
        if a.dimension() != b.dimension() {
            return Err(Error::DimensionMismatch { left: a.dimension(), right: b.dimension() });
        }
        let mut trip: Vec<_> = a.triplets().into_iter().map(|(r, c, v)| (r, c, v * (1.0 - t))).collect();
        trip.extend(b.triplets().into_iter().map(|(r, c, v)| (r, c, v * t)));
        let n = a.dimension();
        let storage = match a.storage {
            Storage::Dense(_) => Storage::Dense(CsrMatrix::from_triplets(n, n, trip).to_dense()),
            Storage::Sparse(_) => Storage::Sparse(CsrMatrix::from_triplets(n, n, trip)),
        };
        Ok(OperatorMatrix {
            storage,
            chirality: a.chirality.clone(),
            basis: a.basis.clone(),
            multiplicity_factor: a.multiplicity_factor,
            provenance: format!("{} + {t}·({} − {})", a.provenance, b.provenance, a.provenance),
        })
    }

    /// `self - other` as a plain matrix operator.
    pub fn difference(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.dimension() != other.dimension() {
            return Err(Error::DimensionMismatch { left: self.dimension(), right: other.dimension() });
        }
        let n = self.dimension();
        let mut trip = self.triplets();
        trip.extend(other.triplets().into_iter().map(|(r, c, v)| (r, c, -v)));
        Ok(OperatorMatrix {
            storage: Storage::Sparse(CsrMatrix::from_triplets(n, n, trip)),
            chirality: self.chirality.clone(),
            basis: BasisInfo::Generic,
            multiplicity_factor: 1,
            provenance: "difference".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn csr_sums_duplicates_and_multiplies() {
        let m = CsrMatrix::from_triplets(
            2,
            2,
            vec![(1, 0, c(1.0, 0.0)), (0, 1, c(0.0, 2.0)), (1, 0, c(2.0, 0.0)), (0, 0, c(0.0, 0.0))],
        );
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 0), c(3.0, 0.0));
        let mut y = vec![c(0.0, 0.0); 2];
        m.mul_vec_into(&[c(1.0, 0.0), c(1.0, 1.0)], &mut y);
        assert_eq!(y, vec![c(-2.0, 2.0), c(3.0, 0.0)]);
        assert_eq!(m.adjoint().get(1, 0), c(0.0, -2.0));
    }

    #[test]
    fn invariant_checks() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let op = OperatorMatrix::from_dense(m, Some(vec![1, -1])).unwrap();
        assert_eq!(op.hermiticity_defect(), 0.0);
        assert_eq!(op.chirality_defect(), Some(0.0));
        assert_eq!(op.block_dims(), Some((1, 1)));
        let bad = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let op = OperatorMatrix::from_dense(bad, Some(vec![1, -1])).unwrap();
        assert!(op.hermiticity_defect() > 1.0);
        assert_eq!(op.chirality_defect(), Some(2.0));
    }

    #[test]
    fn block_apply_matches_dense() {
        let trip = vec![(0, 0, c(1.0, 0.0)), (0, 2, c(0.0, 1.0)), (2, 0, c(0.0, -1.0)), (1, 1, c(-3.0, 0.0))];
        let sparse = OperatorMatrix::new(
            Storage::Sparse(CsrMatrix::from_triplets(3, 3, trip)),
            None,
            BasisInfo::Generic,
        )
        .unwrap();
        let dense = OperatorMatrix::from_dense(sparse.to_dense(), None).unwrap();
        let x = DMatrix::from_fn(3, 2, |i, j| c(i as f64 + 1.0, j as f64));
        assert_eq!(sparse.apply_block(&x), dense.apply_block(&x));
    }
}
