//! Spectra of the spectral sphere backend against dense diagonalization and
//! closed forms.

use nalgebra::DMatrix;
use num::complex::Complex64;
use twisted_dirac::assembly::{
    assemble_sphere, assemble_sphere_complex_twist, spinor_laplacian, weitzenbock_potential,
};
use twisted_dirac::basis::SphereBasis;
use twisted_dirac::bounds::translate_twist;
use twisted_dirac::bundle::ConnectionSpec;
use twisted_dirac::geometry::ModelManifold;
use twisted_dirac::operator::OperatorMatrix;
use twisted_dirac::spectrum::{
    eigen_smallest, eigen_smallest_with, first_nonzero, zero_mode_count, SolverMethod, SolverOptions,
};
use twisted_dirac::HalfInt;

fn sphere(r: f64) -> ModelManifold {
    ModelManifold::sphere(r).unwrap()
}

fn operator(charges: &[i32], twice_l_max: i32, r: f64) -> OperatorMatrix {
    let basis = SphereBasis::for_charges(charges, HalfInt::from_twice(twice_l_max), r).unwrap();
    let conn = ConnectionSpec::constant_curvature(sphere(r), charges.to_vec()).unwrap();
    assemble_sphere(&conn, &basis).unwrap()
}

/// Full dense spectrum, sorted ascending.
fn dense_spectrum(op: &OperatorMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = op.to_dense().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn untwisted_spectrum_is_integers_with_even_multiplicities() {
    let op = operator(&[0], 9, 1.0);
    let spec = dense_spectrum(&op);
    for k in 1..=5 {
        let plus = spec.iter().filter(|v| (*v - k as f64).abs() < 1e-12).count();
        let minus = spec.iter().filter(|v| (*v + k as f64).abs() < 1e-12).count();
        assert_eq!((plus, minus), (2 * k, 2 * k), "eigenvalue ±{k}");
    }
    assert_eq!(spec.len(), 60);
}

#[test]
fn untwisted_smallest_twelve() {
    let op = operator(&[0], 21, 1.0);
    let s = eigen_smallest(&op, 12, 1e-8).unwrap();
    let expect = [-1.0, 1.0, -1.0, 1.0, -2.0, 2.0, -2.0, 2.0, -2.0, 2.0, -2.0, 2.0];
    for (got, want) in s.eigenvalues.iter().zip(&expect) {
        assert!((got - want).abs() < 1e-12);
    }
    assert_eq!(first_nonzero(&s).unwrap(), s.eigenvalues[0].abs());
    assert!((first_nonzero(&s).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(zero_mode_count(&s).unwrap(), (0, 0));
    assert!(s.diagnostics.max_residual <= 1e-9 * s.diagnostics.operator_norm);
    let one = s.clusters.iter().find(|c| (c.value - 1.0).abs() < 1e-9).unwrap();
    assert_eq!(one.multiplicity, 2);
}

#[test]
fn smallest_magnitude_is_truncation_independent() {
    for twice in [5, 9, 13] {
        let s = eigen_smallest(&operator(&[0], twice, 1.0), 4, 1e-8).unwrap();
        assert!((first_nonzero(&s).unwrap() - 1.0).abs() < 1e-13);
    }
}

#[test]
fn radius_scaling() {
    let s = eigen_smallest(&operator(&[0], 9, 2.5), 2, 1e-8).unwrap();
    assert!((first_nonzero(&s).unwrap() - 1.0 / 2.5).abs() < 1e-13);
}

#[test]
fn monopole_spectra() {
    for q in -3i32..=3 {
        for twice in [13, 17, 21] {
            let op = operator(&[q], twice, 1.0);
            let s = eigen_smallest(&op, 4 + q.unsigned_abs() as usize, 1e-8).unwrap();
            assert_eq!(s.kernel_dimension, q.unsigned_abs() as usize, "q={q}");
            let (plus, minus) = zero_mode_count(&s).unwrap();
            assert!(plus == 0 || minus == 0, "q={q}: zero modes in both chiralities");
            let lambda = first_nonzero(&s).unwrap();
            assert!((lambda * lambda - (1.0 + q.abs() as f64)).abs() < 1e-10, "q={q}: λ²={}", lambda * lambda);
        }
    }
}

#[test]
fn charge_minus_one_low_spectrum() {
    let r2 = 2f64.sqrt();
    let s = eigen_smallest(&operator(&[-1], 21, 1.0), 5, 1e-8).unwrap();
    for (got, want) in s.eigenvalues.iter().zip([0.0, -r2, r2, -r2, r2]) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    // the full level carries three modes of each sign
    let s = eigen_smallest(&operator(&[-1], 21, 1.0), 7, 1e-8).unwrap();
    assert_eq!(s.kernel_dimension, 1);
    let sqrt2 = s.clusters.iter().find(|c| (c.value - r2).abs() < 1e-9).unwrap();
    assert_eq!(sqrt2.multiplicity, 3);
}

#[test]
fn charge_two_zero_modes_share_chirality() {
    let s = eigen_smallest(&operator(&[2], 9, 1.0), 6, 1e-8).unwrap();
    assert_eq!(s.kernel_dimension, 2);
    let (p, m) = zero_mode_count(&s).unwrap();
    assert_eq!(p + m, 2);
    assert_eq!((p as i64 - m as i64).abs(), 2);
}

#[test]
fn trivial_frame_multiplies_multiplicities() {
    let single = dense_spectrum(&operator(&[0], 11, 1.0));
    for n in [2usize, 3] {
        let basis = SphereBasis::for_charges(&[0], HalfInt::from_twice(11), 1.0).unwrap();
        let conn = ConnectionSpec::trivial_frame(sphere(1.0), n).unwrap();
        let op = assemble_sphere(&conn, &basis).unwrap();
        let spec = dense_spectrum(&op);
        assert_eq!(spec.len(), n * single.len());
        let mut expect: Vec<f64> = single.iter().flat_map(|v| std::iter::repeat_n(*v, n)).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in spec.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

fn max_entry(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn weitzenbock_residual() {
    for (charges, r) in [(vec![0], 1.0), (vec![0], 1.7), (vec![-1], 1.0), (vec![2, -3], 0.8)] {
        let basis = SphereBasis::for_charges(&charges, HalfInt::from_twice(21), r).unwrap();
        let conn = ConnectionSpec::constant_curvature(sphere(r), charges.clone()).unwrap();
        let d = assemble_sphere(&conn, &basis).unwrap().to_dense();
        let lap = spinor_laplacian(&conn, &basis).unwrap().to_dense();
        let pot = weitzenbock_potential(&conn, &basis).unwrap().to_dense();
        let residual = max_entry(&(&d * &d - lap - pot));
        assert!(residual < 1e-10, "charges {charges:?}: residual {residual}");
    }
    // untwisted: D² ≥ R₀/4 = 1/2 on the unit sphere
    let d = operator(&[0], 9, 1.0).to_dense();
    let min = (&d * &d).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min >= 0.5 - 1e-12);
}

#[test]
fn squared_operator_consistency() {
    let op = operator(&[-1], 13, 1.0);
    let d = op.to_dense();
    let sq = OperatorMatrix::from_dense(&d * &d, None).unwrap();
    let s = eigen_smallest(&op, 20, 1e-8).unwrap();
    let s2 = eigen_smallest(&sq, 20, 1e-8).unwrap();
    let mut a: Vec<f64> = s.eigenvalues.iter().map(|v| v * v).collect();
    a.sort_by(f64::total_cmp);
    let mut b = s2.eigenvalues.clone();
    b.sort_by(f64::total_cmp);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn spectral_symmetry() {
    for q in [0, -1, 3] {
        let spec = dense_spectrum(&operator(&[q], 15, 1.0));
        let n = spec.len();
        for i in 0..n {
            assert!((spec[i] + spec[n - 1 - i]).abs() < 1e-9);
        }
    }
}

#[test]
fn invariants_of_assembled_operators() {
    for charges in [vec![0], vec![-2], vec![1, -1], vec![3, 0, -1]] {
        let op = operator(&charges, 11, 1.3);
        assert!(op.hermiticity_defect() < 1e-12);
        assert!(op.chirality_defect().unwrap() < 1e-12);
    }
}

#[test]
fn complex_twist_agrees_with_real_twist() {
    for q in [0i64, -1, -2] {
        let deg_l = translate_twist(q, 1, 0);
        assert_eq!(deg_l, q - 1);
        let basis = SphereBasis::for_charges(&[q as i32], HalfInt::from_twice(21), 1.0).unwrap();
        let conn = ConnectionSpec::constant_curvature(sphere(1.0), vec![q as i32]).unwrap();
        let real = eigen_smallest(&assemble_sphere(&conn, &basis).unwrap(), 40, 1e-8).unwrap();
        let cplx = eigen_smallest(&assemble_sphere_complex_twist(deg_l as i32, &sphere(1.0), &basis).unwrap(), 40, 1e-8)
            .unwrap();
        for (a, b) in real.eigenvalues.iter().zip(&cplx.eigenvalues) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn dense_and_iterative_solvers_agree() {
    let op = operator(&[-1, 2], 21, 1.0);
    let dense = eigen_smallest_with(&op, 16, &SolverOptions::spectral().with_method(SolverMethod::Dense)).unwrap();
    let iter = eigen_smallest_with(
        &op,
        16,
        &SolverOptions::spectral().with_method(SolverMethod::ChebyshevSubspace),
    )
    .unwrap();
    assert_eq!(iter.diagnostics.method, SolverMethod::ChebyshevSubspace);
    let mut a = dense.magnitudes();
    let mut b = iter.magnitudes();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-8 * x.max(1.0), "{x} vs {y}");
    }
    assert_eq!(dense.kernel_dimension, iter.kernel_dimension);
    assert_eq!(zero_mode_count(&dense).unwrap(), zero_mode_count(&iter).unwrap());
}

#[test]
fn deterministic_iterative_runs() {
    let op = operator(&[1], 13, 1.0);
    let opts = SolverOptions::spectral().with_method(SolverMethod::ChebyshevSubspace);
    let a = eigen_smallest_with(&op, 8, &opts).unwrap();
    let b = eigen_smallest_with(&op, 8, &opts).unwrap();
    assert_eq!(a, b);
}
