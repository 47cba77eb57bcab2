//! Eigenvalue flow along the stabilized family on the sphere.

use nalgebra::DVector;
use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::family_endpoints;
use crate::basis::SphereBasis;
use crate::error::{Error, Result};
use crate::geometry::ModelManifold;
use crate::operator::OperatorMatrix;
use crate::spectrum::{eigen_smallest_with, SolverOptions};

/// Absolute eigenvalue accuracy assumed by the continuity certificate.
pub const FLOW_ATOL: f64 = 1e-9;
const POWER_REL_TOL: f64 = 1e-6;
const POWER_MAX_ITER: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub t_grid: Vec<f64>,
    /// The `k` smallest eigenvalue magnitudes at each grid point, ascending.
    pub magnitudes: Vec<Vec<f64>>,
    pub lambda_min: Vec<f64>,
    /// `‖A_1 − A_0‖₂`.
    pub perturbation_norm: f64,
    pub atol: f64,
    pub lipschitz_ok: bool,
    pub epsilon: f64,
    pub t_epsilon: Option<f64>,
    pub zero_threshold: f64,
    pub kernel_dimension_at_one: usize,
    pub first_nonzero_at_one: Option<f64>,
}

/// `{0, 1/2, 3/4, …, 1 − 2^{−levels}, 1}`.
pub fn default_t_grid(levels: u32) -> Vec<f64> {
    let mut grid = vec![0.0];
    grid.extend((1..=levels).map(|k| 1.0 - 0.5f64.powi(k as i32)));
    grid.push(1.0);
    grid
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.first() != Some(&0.0) || grid.last() != Some(&1.0) {
        return Err(Error::InvalidParameter("t grid must start at 0 and end at 1".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("t grid must be strictly increasing".into()));
    }
    Ok(())
}

pub fn sweep_family(sphere: &ModelManifold, basis: &SphereBasis, t_grid: &[f64], k: usize, eps: f64) -> Result<FlowResult> {
    sweep_family_with(sphere, basis, t_grid, k, eps, &SolverOptions::spectral())
}

pub fn sweep_family_with(
    sphere: &ModelManifold,
    basis: &SphereBasis,
    t_grid: &[f64],
    k: usize,
    eps: f64,
    opts: &SolverOptions,
) -> Result<FlowResult> {
    validate_grid(t_grid)?;
    if k < 4 {
        return Err(Error::InvalidParameter(format!("k = {k} must be at least 4")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let (a0, a1) = family_endpoints(sphere, basis)?;
    let norm = perturbation_norm(&a0, &a1)?;
    let spectra: Vec<_> = t_grid
        .par_iter()
        .map(|&t| {
            let op = OperatorMatrix::affine_combination(&a0, &a1, t)?;
            eigen_smallest_with(&op, k, opts).map_err(|e| {
                log::error!("family solve failed at t = {t}: {e}");
                Error::Family { t, source: Box::new(e) }
            })
        })
        .collect::<Result<_>>()?;
    let magnitudes: Vec<Vec<f64>> = spectra
        .iter()
        .map(|s| {
            let mut m = s.magnitudes();
            m.sort_by(f64::total_cmp);
            m
        })
        .collect();
    let at_one = spectra.last().expect("grid is nonempty");
    let mut flow = FlowResult {
        t_grid: t_grid.to_vec(),
        lambda_min: magnitudes.iter().map(|m| m[0]).collect(),
        magnitudes,
        perturbation_norm: norm,
        atol: FLOW_ATOL,
        lipschitz_ok: false,
        epsilon: eps,
        t_epsilon: None,
        zero_threshold: opts.zero_threshold,
        kernel_dimension_at_one: at_one.kernel_dimension,
        first_nonzero_at_one: crate::spectrum::first_nonzero(at_one).ok(),
    };
    flow.lipschitz_ok = continuity_certificate(&flow);
    flow.t_epsilon = locate_small_eigenvalue(&flow, eps);
    Ok(flow)
}

/// `‖A_1 − A_0‖₂` by power iteration on the squared difference, from a seeded
/// start vector, to relative tolerance 1e−6.
pub fn perturbation_norm(a0: &OperatorMatrix, a1: &OperatorMatrix) -> Result<f64> {
    let d = a1.difference(a0)?;
    let n = d.dimension();
    if n == 0 || d.triplets().is_empty() {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37);
    let mut v = DVector::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    v /= Complex64::new(v.norm(), 0.0);
    let mut w = DVector::zeros(n);
    let mut u = DVector::zeros(n);
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITER {
        d.apply(v.as_slice(), w.as_mut_slice());
        d.apply(w.as_slice(), u.as_mut_slice());
        let sq = w.norm_squared();
        let next = sq.sqrt();
        let un = u.norm();
        if un == 0.0 {
            return Ok(0.0);
        }
        v = &u / Complex64::new(un, 0.0);
        if (next - estimate).abs() <= POWER_REL_TOL * next {
            return Ok(next);
        }
        estimate = next;
    }
    log::warn!("power iteration for the perturbation norm hit its iteration cap");
    Ok(estimate)
}

/// True iff every adjacent grid pair satisfies
/// `|λ_j(t) − λ_j(t′)| ≤ ‖A_1 − A_0‖·|t − t′| + 2·atol` for each tracked `j`.
pub fn continuity_certificate(flow: &FlowResult) -> bool {
    flow.t_grid.windows(2).zip(flow.magnitudes.windows(2)).all(|(t, m)| {
        let slack = flow.perturbation_norm * (t[1] - t[0]).abs() + 2.0 * flow.atol;
        m[0].iter().zip(&m[1]).all(|(a, b)| (a - b).abs() <= slack)
    })
}

/// Smallest grid `t` with `zero_threshold < λ_min(t) < eps`.
pub fn locate_small_eigenvalue(flow: &FlowResult, eps: f64) -> Option<f64> {
    flow.t_grid
        .iter()
        .zip(&flow.lambda_min)
        .find(|(_, &l)| l > flow.zero_threshold && l < eps)
        .map(|(&t, _)| t)
}
