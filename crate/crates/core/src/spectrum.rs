//! Hermitian eigensolvers, multiplicity clustering and chirality-resolved
//! zero-mode counting.
//!
//! Small operators are diagonalized densely. Larger ones use Chebyshev-filtered
//! subspace iteration, which targets the smallest magnitudes without a
//! shift-invert factorization: on the Gram operator `D†D` when `H` is
//! off-diagonal in a balanced grading, on `H²` otherwise.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::DENSE_THRESHOLD;
use crate::error::{Error, Result};
use crate::operator::{CsrMatrix, OperatorMatrix};

/// Default zero threshold for the spectral backends.
pub const SPECTRAL_ZERO_THRESHOLD: f64 = 1e-8;
/// Default absolute clustering tolerance for the spectral backends.
pub const SPECTRAL_CLUSTER_TOL: f64 = 1e-7;
/// Smallest admissible `|⟨v, Γv⟩|` for a rotated kernel vector.
pub const CHIRALITY_CUTOFF: f64 = 0.99;

const LANCZOS_STEPS: usize = 40;
const FILTER_DEGREE: usize = 24;
/// Relative Gram eigenvalue below which a direction counts as dependent.
const RANK_TOL: f64 = 1e-14;
/// Relative width of a run of equal magnitudes in the output order.
const BALANCE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClusterTolerance {
    /// Neighbours closer than `tol` share a cluster.
    Absolute { tol: f64 },
    /// Neighbours join when their gap is at most `fraction` of the larger
    /// adjacent gap.
    LocalGap { fraction: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Diagonal,
    Dense,
    ChebyshevSubspace,
    /// Assembled from other spectra rather than solved.
    Combined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub zero_threshold: f64,
    pub cluster: ClusterTolerance,
    /// Residual target relative to the operator norm.
    pub residual_tol: f64,
    pub max_iterations: usize,
    pub dense_threshold: usize,
    pub seed: u64,
    /// Forces a method instead of choosing by size.
    pub method: Option<SolverMethod>,
}

impl SolverOptions {
    pub fn spectral() -> Self {
        SolverOptions {
            zero_threshold: SPECTRAL_ZERO_THRESHOLD,
            cluster: ClusterTolerance::Absolute { tol: SPECTRAL_CLUSTER_TOL },
            residual_tol: 1e-9,
            max_iterations: 400,
            dense_threshold: DENSE_THRESHOLD,
            seed: 0x5eed,
            method: None,
        }
    }

    pub fn lattice(zero_threshold: f64) -> Self {
        SolverOptions {
            zero_threshold,
            cluster: ClusterTolerance::LocalGap { fraction: 0.1 },
            residual_tol: 1e-7,
            ..Self::spectral()
        }
    }

    pub fn with_method(mut self, method: SolverMethod) -> Self {
        self.method = Some(method);
        self
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::spectral()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub method: SolverMethod,
    pub iterations: usize,
    /// Largest `‖Mv − λv‖` over the reported pairs.
    pub max_residual: f64,
    pub residual_target: f64,
    /// Estimate of `‖M‖` used to scale the residual target.
    pub operator_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroModes {
    pub plus: usize,
    pub minus: usize,
}

/// Low-lying spectrum of one operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Sorted by magnitude, ties broken by sign (negative first).
    pub eigenvalues: Vec<f64>,
    /// `⟨v, Γv⟩` per eigenvalue; kernel vectors are first rotated to
    /// diagonalize `Γ` on the kernel.
    pub chirality: Option<Vec<f64>>,
    /// Clusters ordered by magnitude; together they partition `eigenvalues`.
    pub clusters: Vec<Cluster>,
    /// Index into `clusters` of each eigenvalue.
    pub cluster_of: Vec<usize>,
    pub zero_threshold: f64,
    pub cluster_tolerance: ClusterTolerance,
    pub kernel_dimension: usize,
    /// Chirality split of the kernel, when the operator is graded.
    pub zero_modes: Option<ZeroModes>,
    /// Smallest `|⟨v, Γv⟩|` among rotated kernel vectors.
    pub kernel_chirality_floor: Option<f64>,
    /// Matrix eigenvalues per continuum eigenvalue.
    pub multiplicity_factor: u32,
    pub diagnostics: SolverDiagnostics,
}

impl SpectrumResult {
    /// Builds a result from plain values (no eigenvectors, no grading).
    pub fn from_values(
        mut values: Vec<f64>,
        zero_threshold: f64,
        cluster_tolerance: ClusterTolerance,
        diagnostics: SolverDiagnostics,
    ) -> Self {
        sort_by_magnitude(&mut values);
        let (clusters, cluster_of) = cluster_values(&values, cluster_tolerance);
        let kernel_dimension = values.iter().filter(|v| v.abs() <= zero_threshold).count();
        SpectrumResult {
            eigenvalues: values,
            chirality: None,
            clusters,
            cluster_of,
            zero_threshold,
            cluster_tolerance,
            kernel_dimension,
            zero_modes: None,
            kernel_chirality_floor: None,
            multiplicity_factor: 1,
            diagnostics,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|v| v.abs()).collect()
    }

    /// Smallest `|λ|`, zero modes included.
    pub fn min_magnitude(&self) -> Option<f64> {
        self.eigenvalues.first().map(|v| v.abs())
    }

    pub fn is_graded(&self) -> bool {
        self.chirality.is_some()
    }

    /// Cluster multiplicity of the eigenvalue at `index`.
    pub fn multiplicity_of(&self, index: usize) -> usize {
        self.clusters[self.cluster_of[index]].multiplicity
    }
}

fn sort_by_magnitude(values: &mut [f64]) {
    values.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
}

/// Groups values into clusters of nearby signed values. Returns the clusters
/// ordered by magnitude and the cluster index of every input value.
/// By magnitude, then negative before positive; magnitudes that agree to
/// rounding count as equal so a ±λ pair always orders the same way.
fn magnitude_order(a: f64, b: f64) -> std::cmp::Ordering {
    if (a.abs() - b.abs()).abs() <= 1e-12 * a.abs().max(1.0) {
        a.total_cmp(&b)
    } else {
        a.abs().total_cmp(&b.abs())
    }
}

/// Indices by magnitude; within a run of equal magnitudes negatives and
/// positives alternate, so truncating a ±λ level keeps it sign-balanced.
fn balanced_order(keys: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| magnitude_order(keys[a], keys[b]).then(a.cmp(&b)));
    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let m = keys[idx[start]].abs();
        let mut end = start + 1;
        while end < idx.len() && keys[idx[end]].abs() - m <= BALANCE_TOL * m.max(1.0) {
            end += 1;
        }
        let (neg, pos): (Vec<usize>, Vec<usize>) = idx[start..end].iter().partition(|&&i| keys[i] < 0.0);
        for k in 0..neg.len().max(pos.len()) {
            out.extend(neg.get(k));
            out.extend(pos.get(k));
        }
        start = end;
    }
    out
}

fn cluster_values(values: &[f64], tol: ClusterTolerance) -> (Vec<Cluster>, Vec<usize>) {
    if values.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    let joins = |i: usize| match tol {
        ClusterTolerance::Absolute { tol } => gaps[i] <= tol,
        ClusterTolerance::LocalGap { fraction } => {
            let left = if i > 0 { gaps[i - 1] } else { 0.0 };
            let right = gaps.get(i + 1).copied().unwrap_or(0.0);
            gaps[i] <= 1e-12 || gaps[i] <= fraction * left.max(right)
        }
    };
    let mut groups: Vec<Vec<usize>> = vec![vec![order[0]]];
    for k in 1..sorted.len() {
        if joins(k - 1) {
            groups.last_mut().unwrap().push(order[k]);
        } else {
            groups.push(vec![order[k]]);
        }
    }
    let mut clusters: Vec<(Cluster, Vec<usize>)> = groups
        .into_iter()
        .map(|g| {
            let value = g.iter().map(|&i| values[i]).sum::<f64>() / g.len() as f64;
            (Cluster { value, multiplicity: g.len() }, g)
        })
        .collect();
    clusters.sort_by(|a, b| magnitude_order(a.0.value, b.0.value));
    let mut cluster_of = vec![0; values.len()];
    for (ci, (_, members)) in clusters.iter().enumerate() {
        for &i in members {
            cluster_of[i] = ci;
        }
    }
    (clusters.into_iter().map(|c| c.0).collect(), cluster_of)
}

/// The `count` smallest-magnitude eigenvalues of `op` with default spectral
/// options and the given zero threshold.
pub fn eigen_smallest(op: &OperatorMatrix, count: usize, zero_threshold: f64) -> Result<SpectrumResult> {
    let opts = SolverOptions {
        zero_threshold,
        ..SolverOptions::spectral()
    };
    eigen_smallest_with(op, count, &opts)
}

pub fn eigen_smallest_with(op: &OperatorMatrix, count: usize, opts: &SolverOptions) -> Result<SpectrumResult> {
    let n = op.dimension();
    if count == 0 || count > n {
        return Err(Error::InvalidParameter(format!(
            "requested {count} eigenvalues of a {n}-dimensional operator"
        )));
    }
    if !(opts.zero_threshold > 0.0) {
        return Err(Error::InvalidParameter("zero threshold must be positive".into()));
    }
    let method = opts.method.unwrap_or_else(|| {
        if op.is_diagonal() {
            SolverMethod::Diagonal
        } else if n <= opts.dense_threshold {
            SolverMethod::Dense
        } else {
            SolverMethod::ChebyshevSubspace
        }
    });
    let pairs = match method {
        SolverMethod::Diagonal => diagonal_pairs(op, count)?,
        SolverMethod::Dense => dense_pairs(op, count),
        SolverMethod::ChebyshevSubspace => match gram_pairs(op, count, opts)? {
            Some(pairs) => pairs,
            None => chebyshev_pairs(op, count, opts)?,
        },
        SolverMethod::Combined => {
            return Err(Error::InvalidParameter("combined spectra are not solved".into()))
        }
    };
    finish(op, pairs, opts)
}

/// Eigenpairs sorted by magnitude, with solver bookkeeping.
struct Pairs {
    values: Vec<f64>,
    vectors: DMatrix<Complex64>,
    method: SolverMethod,
    iterations: usize,
    norm: f64,
}

fn diagonal_pairs(op: &OperatorMatrix, count: usize) -> Result<Pairs> {
    let n = op.dimension();
    let mut diag = vec![0.0; n];
    for (r, _, v) in op.triplets() {
        diag[r] = v.re;
    }
    let mut order = balanced_order(&diag);
    order.truncate(count);
    let mut vectors = DMatrix::zeros(n, count);
    for (j, &i) in order.iter().enumerate() {
        vectors[(i, j)] = Complex64::new(1.0, 0.0);
    }
    let norm = diag.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(Pairs {
        values: order.iter().map(|&i| diag[i]).collect(),
        vectors,
        method: SolverMethod::Diagonal,
        iterations: 0,
        norm,
    })
}

fn select_smallest(values: &DVector<f64>, vectors: &DMatrix<Complex64>, count: usize) -> (Vec<f64>, DMatrix<Complex64>) {
    let mut order = balanced_order(values.as_slice());
    order.truncate(count);
    let picked = DMatrix::from_fn(vectors.nrows(), order.len(), |r, c| vectors[(r, order[c])]);
    (order.iter().map(|&i| values[i]).collect(), picked)
}

fn dense_pairs(op: &OperatorMatrix, count: usize) -> Pairs {
    let m = op.to_dense();
    let eig = SymmetricEigen::new(m);
    let norm = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let (values, vectors) = select_smallest(&eig.eigenvalues, &eig.eigenvectors, count);
    Pairs {
        values,
        vectors,
        method: SolverMethod::Dense,
        iterations: 1,
        norm,
    }
}

fn orthonormalize(x: DMatrix<Complex64>) -> DMatrix<Complex64> {
    x.qr().q()
}

/// Orthonormal basis of the numerically significant column space of `x`.
fn orthonormalize_ranked(x: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let gram = x.adjoint() * &x;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(*v));
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > RANK_TOL * top)
        .collect();
    let basis = DMatrix::from_fn(x.ncols(), keep.len(), |r, c| {
        eig.eigenvectors[(r, keep[c])] / Complex64::new(eig.eigenvalues[keep[c]].sqrt(), 0.0)
    });
    orthonormalize(x * basis)
}

/// True when the top Ritz value of the block sits in the same cluster as the
/// last wanted one, so the filter edge cannot separate them.
fn straddles(ritz_sq: &[f64], wanted: usize, upper: f64) -> bool {
    let (last, top) = (ritz_sq[wanted - 1], ritz_sq[ritz_sq.len() - 1]);
    top - last <= 1e-2 * last.abs() + 1e-10 * upper
}

/// `v` with `extra` random columns appended, orthonormalized.
fn grow_block(v: &DMatrix<Complex64>, extra: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let (n, b) = v.shape();
    let extra = extra.min(n - b);
    let mut out = DMatrix::zeros(n, b + extra);
    out.columns_mut(0, b).copy_from(v);
    for c in b..b + extra {
        for r in 0..n {
            out[(r, c)] = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
    }
    orthonormalize(out)
}

/// Upper bound on `‖H‖` from a short Lanczos run, capped by Gershgorin.
fn norm_upper_bound(op: &OperatorMatrix, seed: u64) -> f64 {
    let n = op.dimension();
    let gersh = op.gershgorin_bound();
    let steps = LANCZOS_STEPS.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1a2c);
    let mut v = DVector::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, 0.0));
    v /= Complex64::new(v.norm(), 0.0);
    let mut v_prev = DVector::zeros(n);
    let mut alphas = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::with_capacity(steps);
    let mut beta = 0.0;
    let mut w = DVector::zeros(n);
    for _ in 0..steps {
        op.apply(v.as_slice(), w.as_mut_slice());
        let alpha = v.dotc(&w).re;
        w -= &v * Complex64::new(alpha, 0.0) + &v_prev * Complex64::new(beta, 0.0);
        alphas.push(alpha);
        beta = w.norm();
        betas.push(beta);
        if beta < 1e-12 * gersh.max(1.0) {
            break;
        }
        v_prev = std::mem::replace(&mut v, &w / Complex64::new(beta, 0.0));
    }
    let k = alphas.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j || j + 1 == i {
            betas[i.min(j)]
        } else {
            0.0
        }
    });
    let theta = SymmetricEigen::new(t).eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let last_beta = betas.last().copied().unwrap_or(0.0);
    ((theta + last_beta) * 1.05).min(gersh).max(f64::MIN_POSITIVE)
}

/// `Y = H(H X)`.
fn apply_squared(op: &OperatorMatrix, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    op.apply_block(&op.apply_block(x))
}

/// Scaled Chebyshev filter of degree `m` in the positive operator `apply`,
/// damping `[a, b]` and normalized at `a0 < a`.
fn chebyshev_filter<F>(apply: F, x: &DMatrix<Complex64>, m: usize, a: f64, b: f64, a0: f64) -> DMatrix<Complex64>
where
    F: Fn(&DMatrix<Complex64>) -> DMatrix<Complex64>,
{
    let e = (b - a) / 2.0;
    let c = (b + a) / 2.0;
    let mut sigma = e / (a0 - c);
    let tau = 2.0 / sigma;
    let cplx = |v: f64| Complex64::new(v, 0.0);
    let mut prev = x.clone();
    let mut cur = (apply(x) - x * cplx(c)) * cplx(sigma / e);
    for _ in 1..m {
        let sigma_new = 1.0 / (tau - sigma);
        let next = (apply(&cur) - &cur * cplx(c)) * cplx(2.0 * sigma_new / e)
            - &prev * cplx(sigma * sigma_new);
        prev = cur;
        cur = next;
        sigma = sigma_new;
    }
    cur
}

/// Damped interval `[a, upper]` and normalization point from the current
/// Ritz values of the positive filtered operator.
fn filter_window(ritz_sq: &[f64], upper: f64) -> (f64, f64) {
    let cut = ritz_sq.iter().fold(0.0f64, |a, v| a.max(*v));
    let floor = ritz_sq.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    let a = cut.min(0.5 * upper);
    let a0 = (floor - 1e-3 * (a - floor).max(f64::MIN_POSITIVE)).min(a * (1.0 - 1e-6));
    (a, a0)
}

/// Rayleigh–Ritz with `H²` on orthonormal `q`, ascending. The smallest values
/// of `H²` are extremal, so unlike those of `H` they cannot be spurious.
fn rayleigh_ritz_squared(op: &OperatorMatrix, q: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>, DMatrix<Complex64>) {
    let hq = op.apply_block(q);
    let mut g = hq.adjoint() * &hq;
    let gt = g.adjoint();
    g = (g + gt) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(g);
    let (values, w) = select_smallest(&eig.eigenvalues, &eig.eigenvectors, q.ncols());
    (values, q * &w, hq * w)
}

/// Eigenpairs of `H` from span{V, HV}, which is H-invariant whenever span V
/// is H²-invariant. Returns values, vectors and `H·vectors` by magnitude.
fn extract_pairs(
    op: &OperatorMatrix,
    v: &DMatrix<Complex64>,
    hv: &DMatrix<Complex64>,
) -> (Vec<f64>, DMatrix<Complex64>, DMatrix<Complex64>) {
    // HV is scaled as a whole: normalizing its columns one by one would
    // promote the rounding noise of kernel vectors to fake directions
    let b = v.ncols();
    let scale = hv.norm().max(f64::MIN_POSITIVE) / (b as f64).sqrt();
    let mut both = DMatrix::zeros(v.nrows(), 2 * b);
    both.columns_mut(0, b).copy_from(v);
    both.columns_mut(b, b).copy_from(&(hv / Complex64::new(scale, 0.0)));
    let q = orthonormalize_ranked(both);
    let hq = op.apply_block(&q);
    let mut g = q.adjoint() * &hq;
    let gt = g.adjoint();
    g = (g + gt) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(g);
    let (values, w) = select_smallest(&eig.eigenvalues, &eig.eigenvectors, b.min(q.ncols()));
    (values, &q * &w, hq * w)
}

fn chebyshev_pairs(op: &OperatorMatrix, count: usize, opts: &SolverOptions) -> Result<Pairs> {
    let n = op.dimension();
    let block = (count + (count / 2).max(8)).min(n);
    let norm = norm_upper_bound(op, opts.seed);
    let upper = norm * norm;
    let target = opts.residual_tol * norm;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let x = DMatrix::from_fn(n, block, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let mut q = orthonormalize(x);
    let mut worst = f64::INFINITY;
    for iteration in 1..=opts.max_iterations {
        let (mu, v, hv) = rayleigh_ritz_squared(op, &q);
        let (values, vectors, hvec) = extract_pairs(op, &v, &hv);
        worst = if values.len() < count {
            f64::INFINITY
        } else {
            (0..count)
                .map(|j| (hvec.column(j) - vectors.column(j) * Complex64::new(values[j], 0.0)).norm())
                .fold(0.0, f64::max)
        };
        log::trace!("subspace iteration {iteration}: worst residual {worst:.3e}");
        if worst <= target {
            log::debug!("subspace iteration converged after {iteration} steps");
            return Ok(Pairs {
                values: values[..count].to_vec(),
                vectors: vectors.columns(0, count).into_owned(),
                method: SolverMethod::ChebyshevSubspace,
                iterations: iteration,
                norm,
            });
        }
        let (a, a0) = filter_window(&mu, upper);
        q = orthonormalize(chebyshev_filter(|x| apply_squared(op, x), &v, FILTER_DEGREE, a, upper, a0));
        if q.ncols() < n && straddles(&mu, count, upper) {
            log::debug!("growing subspace past a cluster at {:.3e}", mu[count - 1]);
            q = grow_block(&q, (count / 2).max(8), &mut rng);
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iterations,
        worst_residual: worst,
        target,
    })
}

/// `H = [[0, D], [D†, 0]]` in the chirality splitting: plus indices, minus
/// indices, `D` and `D†`. `None` unless the grading is balanced and `H`
/// anticommutes with it exactly.
fn chiral_split(op: &OperatorMatrix) -> Option<(Vec<usize>, Vec<usize>, CsrMatrix, CsrMatrix)> {
    let gamma = op.chirality()?;
    let plus: Vec<usize> = (0..gamma.len()).filter(|&i| gamma[i] > 0).collect();
    let minus: Vec<usize> = (0..gamma.len()).filter(|&i| gamma[i] < 0).collect();
    if plus.len() != minus.len() || plus.is_empty() {
        return None;
    }
    let mut slot = vec![0usize; gamma.len()];
    for (k, &i) in plus.iter().enumerate() {
        slot[i] = k;
    }
    for (k, &i) in minus.iter().enumerate() {
        slot[i] = k;
    }
    let mut upper = Vec::new();
    for (r, c, v) in op.triplets() {
        match (gamma[r] > 0, gamma[c] > 0) {
            (true, false) => upper.push((slot[r], slot[c], v)),
            (false, true) => {}
            _ => return None,
        }
    }
    let d = CsrMatrix::from_triplets(plus.len(), minus.len(), upper);
    let dt = d.adjoint();
    Some((plus, minus, d, dt))
}

fn csr_block(m: &CsrMatrix, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(m.nrows(), x.ncols());
    for (src, mut dst) in x.column_iter().zip(out.column_iter_mut()) {
        m.mul_vec_into(src.as_slice(), dst.as_mut_slice());
    }
    out
}

/// Subspace iteration on the half-size Gram operator `D†D` of a balanced
/// graded operator. Each Gram eigenpair `(σ², v)` yields the pair
/// `±σ, (Dv/σ, ±v)/√2` of `H`, so no ±λ mixing can occur. Returns `None`
/// when the shape does not apply or `D` has an exact kernel, whose partner
/// vectors this construction cannot produce.
fn gram_pairs(op: &OperatorMatrix, count: usize, opts: &SolverOptions) -> Result<Option<Pairs>> {
    let Some((plus, minus, d, dt)) = chiral_split(op) else {
        return Ok(None);
    };
    let m = minus.len();
    let k = count.div_ceil(2).min(m);
    let block = (k + (k / 2).max(8)).min(m);
    let norm = norm_upper_bound(op, opts.seed);
    let upper = norm * norm;
    let target = opts.residual_tol * norm;
    // Gram eigenvalues carry rounding of order eps·‖G‖
    let exact_zero = 1e-12 * upper;
    let gram = |x: &DMatrix<Complex64>| csr_block(&dt, &csr_block(&d, x));
    let ritz = |q: &DMatrix<Complex64>| {
        let gq = gram(q);
        let mut g = q.adjoint() * &gq;
        let gt = g.adjoint();
        g = (g + gt) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(g);
        let (values, w) = select_smallest(&eig.eigenvalues, &eig.eigenvectors, q.ncols());
        (values, q * &w, gq * w)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let x = DMatrix::from_fn(m, block, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let (mut mu, mut v, mut gv) = ritz(&orthonormalize(x));
    let mut worst = f64::INFINITY;
    for iteration in 1..=opts.max_iterations {
        let mut exact = false;
        worst = 0.0;
        for j in 0..k {
            let gres = (gv.column(j) - v.column(j) * Complex64::new(mu[j], 0.0)).norm();
            let sigma = mu[j].max(0.0).sqrt();
            if mu[j] < exact_zero {
                exact = true;
            }
            worst = worst.max(gres / (std::f64::consts::SQRT_2 * sigma.max(f64::MIN_POSITIVE)));
        }
        log::trace!("gram iteration {iteration}: worst residual {worst:.3e}");        if exact {
            log::debug!("exact kernel in the off-diagonal block, using the full operator");
            return Ok(None);
        }
        if worst <= target {
            log::debug!("gram subspace iteration converged after {iteration} steps");
            return Ok(Some(assemble_pairs(&plus, &minus, &d, &mu[..k], &v, count, iteration, norm)));
        }
        let (a, a0) = filter_window(&mu, upper);
        let mut q = orthonormalize(chebyshev_filter(gram, &v, FILTER_DEGREE, a, upper, a0));
        if q.ncols() < m && straddles(&mu, k, upper) {
            log::debug!("growing subspace past a cluster at {:.3e}", mu[k - 1]);
            q = grow_block(&q, (k / 2).max(8), &mut rng);
        }
        (mu, v, gv) = ritz(&q);
    }
    Err(Error::Convergence {
        iterations: opts.max_iterations,
        worst_residual: worst,
        target,
    })
}

#[allow(clippy::too_many_arguments)]
fn assemble_pairs(
    plus: &[usize],
    minus: &[usize],
    d: &CsrMatrix,
    mu: &[f64],
    v: &DMatrix<Complex64>,
    count: usize,
    iterations: usize,
    norm: f64,
) -> Pairs {
    let n = plus.len() + minus.len();
    let k = mu.len();
    let dv = csr_block(d, &v.columns(0, k).into_owned());
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut values = DVector::zeros(2 * k);
    let mut vectors = DMatrix::zeros(n, 2 * k);
    for j in 0..k {
        let sigma = mu[j].max(0.0).sqrt();
        let u = dv.column(j) / Complex64::new(sigma, 0.0);
        for (sign, col) in [(-1.0, 2 * j), (1.0, 2 * j + 1)] {
            values[col] = sign * sigma;
            for (a, &i) in plus.iter().enumerate() {
                vectors[(i, col)] = u[a] * h;
            }
            for (b, &i) in minus.iter().enumerate() {
                vectors[(i, col)] = v[(b, j)] * h * sign;
            }
        }
    }
    let (values, vectors) = select_smallest(&values, &vectors, count);
    Pairs {
        values,
        vectors,
        method: SolverMethod::ChebyshevSubspace,
        iterations,
        norm,
    }
}

fn finish(op: &OperatorMatrix, pairs: Pairs, opts: &SolverOptions) -> Result<SpectrumResult> {
    let Pairs {
        values,
        vectors,
        method,
        iterations,
        norm,
    } = pairs;
    // order by cluster, so rounding noise cannot reorder a level
    let (values, vectors) = {
        let (clusters, of) = cluster_values(&values, opts.cluster);
        let keys: Vec<f64> = of.iter().map(|&c| clusters[c].value).collect();
        let order = balanced_order(&keys);
        let v = DMatrix::from_fn(vectors.nrows(), order.len(), |r, c| vectors[(r, order[c])]);
        (order.iter().map(|&i| values[i]).collect::<Vec<f64>>(), v)
    };
    let hv = op.apply_block(&vectors);
    let max_residual = (0..values.len())
        .map(|j| (hv.column(j) - vectors.column(j) * Complex64::new(values[j], 0.0)).norm())
        .fold(0.0, f64::max);
    let kernel: Vec<usize> = (0..values.len()).filter(|&j| values[j].abs() <= opts.zero_threshold).collect();

    let (chirality, zero_modes, floor) = match op.chirality() {
        None => (None, None, None),
        Some(gamma) => {
            let expect = |v: &DMatrix<Complex64>, i: usize, j: usize| -> Complex64 {
                v.column(i)
                    .iter()
                    .zip(v.column(j).iter())
                    .zip(gamma)
                    .map(|((a, b), &g)| a.conj() * b * g as f64)
                    .sum()
            };
            let mut chir: Vec<f64> = (0..values.len()).map(|j| expect(&vectors, j, j).re).collect();
            let k = kernel.len();
            let (modes, floor) = if k == 0 {
                (ZeroModes { plus: 0, minus: 0 }, None)
            } else {
                let g = DMatrix::from_fn(k, k, |a, b| expect(&vectors, kernel[a], kernel[b]));
                let eig = SymmetricEigen::new(g);
                let mut gs: Vec<f64> = eig.eigenvalues.iter().copied().collect();
                gs.sort_by(|a, b| b.total_cmp(a));
                for (slot, &j) in kernel.iter().enumerate() {
                    chir[j] = gs[slot];
                }
                let plus = gs.iter().filter(|&&x| x > 0.0).count();
                let floor = gs.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
                (ZeroModes { plus, minus: k - plus }, Some(floor))
            };
            (Some(chir), Some(modes), floor)
        }
    };

    let (clusters, cluster_of) = cluster_values(&values, opts.cluster);
    Ok(SpectrumResult {
        kernel_dimension: kernel.len(),
        eigenvalues: values,
        chirality,
        clusters,
        cluster_of,
        zero_threshold: opts.zero_threshold,
        cluster_tolerance: opts.cluster,
        zero_modes,
        kernel_chirality_floor: floor,
        multiplicity_factor: op.multiplicity_factor(),
        diagnostics: SolverDiagnostics {
            method,
            iterations,
            max_residual,
            residual_target: opts.residual_tol * norm,
            operator_norm: norm,
        },
    })
}

/// Smallest `|λ|` strictly above the zero threshold.
pub fn first_nonzero(spec: &SpectrumResult) -> Result<f64> {
    spec.eigenvalues
        .iter()
        .map(|v| v.abs())
        .find(|v| *v > spec.zero_threshold)
        .ok_or(Error::EmptySpectrum {
            threshold: spec.zero_threshold,
            count: spec.eigenvalues.len(),
        })
}

/// Chirality split `(n₊, n₋)` of the computed kernel.
pub fn zero_mode_count(spec: &SpectrumResult) -> Result<(usize, usize)> {
    let modes = spec
        .zero_modes
        .ok_or_else(|| Error::Domain("spectrum carries no chirality grading".into()))?;
    if let Some(floor) = spec.kernel_chirality_floor {
        if floor < CHIRALITY_CUTOFF {
            return Err(Error::ChiralityAmbiguity { expectation: floor });
        }
    }
    Ok((modes.plus, modes.minus))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn graded_pair(lambda: f64) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c(0.0), c(lambda), c(lambda), c(0.0)])
    }

    #[test]
    fn diagonal_fast_path() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(3.0), c(-0.5), c(0.5), c(2.0)]));
        let op = OperatorMatrix::from_dense(m, None).unwrap();
        let s = eigen_smallest(&op, 3, 1e-6).unwrap();
        assert_eq!(s.eigenvalues, vec![-0.5, 0.5, 2.0]);
        assert_eq!(s.diagnostics.method, SolverMethod::Diagonal);
        assert_eq!(first_nonzero(&s).unwrap(), 0.5);
    }

    #[test]
    fn kernel_rotation_resolves_mixed_vectors() {
        // a 2-dimensional kernel spanned by mixtures of + and − vectors
        let h = DMatrix::from_row_slice(
            4,
            4,
            &[
                c(0.0), c(0.0), c(0.0), c(0.0),
                c(0.0), c(0.0), c(0.0), c(2.0),
                c(0.0), c(0.0), c(0.0), c(0.0),
                c(0.0), c(2.0), c(0.0), c(0.0),
            ],
        );
        let op = OperatorMatrix::from_dense(h, Some(vec![1, 1, -1, -1])).unwrap();
        let s = eigen_smallest(&op, 4, 1e-8).unwrap();
        assert_eq!(s.kernel_dimension, 2);
        assert_eq!(zero_mode_count(&s).unwrap(), (1, 1));
    }

    #[test]
    fn ambiguous_kernel_is_reported() {
        // Γ does not commute with the kernel projector here
        let op = OperatorMatrix::from_dense(DMatrix::from_element(2, 2, c(0.0)), Some(vec![1, -1])).unwrap();
        let mut s = eigen_smallest(&op, 2, 1e-8).unwrap();
        assert_eq!(zero_mode_count(&s).unwrap(), (1, 1));
        s.kernel_chirality_floor = Some(0.3);
        assert!(matches!(zero_mode_count(&s), Err(Error::ChiralityAmbiguity { .. })));
    }

    #[test]
    fn empty_spectrum_error() {
        let op = OperatorMatrix::from_dense(graded_pair(1e-12), Some(vec![1, -1])).unwrap();
        let s = eigen_smallest(&op, 2, 1e-8).unwrap();
        assert!(matches!(first_nonzero(&s), Err(Error::EmptySpectrum { .. })));
    }

    #[test]
    fn clustering_absolute_and_local_gap() {
        let (cl, of) = cluster_values(&[1.0, -1.0, 1.0 + 1e-9, 2.0], ClusterTolerance::Absolute { tol: 1e-7 });
        assert_eq!(cl.iter().map(|c| c.multiplicity).collect::<Vec<_>>(), vec![1, 2, 1]);
        assert_eq!(of, vec![1, 0, 1, 2]);
        let (cl, _) = cluster_values(&[0.30, 0.31, 0.60, 0.61, 1.5], ClusterTolerance::LocalGap { fraction: 0.1 });
        assert_eq!(cl.iter().map(|c| c.multiplicity).collect::<Vec<_>>(), vec![2, 2, 1]);
    }

    #[test]
    fn rejects_bad_requests() {
        let op = OperatorMatrix::from_dense(graded_pair(1.0), Some(vec![1, -1])).unwrap();
        assert!(eigen_smallest(&op, 3, 1e-8).is_err());
        assert!(eigen_smallest(&op, 1, 0.0).is_err());
    }
}
