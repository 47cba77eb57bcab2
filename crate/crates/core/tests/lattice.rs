//! Wilson lattice backend on flat tori: flux quantization, free spectra and
//! convergence toward the Landau levels.

use std::f64::consts::PI;

use twisted_dirac::assembly::{assemble_torus_lattice, lattice_zero_threshold};
use twisted_dirac::basis::{LinkField, TorusLattice};
use twisted_dirac::bounds::he_real_bound;
use twisted_dirac::bundle::ConnectionSpec;
use twisted_dirac::geometry::{ModelManifold, Periodicity};
use twisted_dirac::index::analytic_index;
use twisted_dirac::spectrum::{eigen_smallest_with, first_nonzero, SolverMethod, SolverOptions, SpectrumResult};

fn torus(spin: Periodicity) -> ModelManifold {
    ModelManifold::flat_torus(2.0 * PI, 2.0 * PI, [spin; 2]).unwrap()
}

fn solve(spin: Periodicity, degrees: Vec<i32>, n: usize, count: usize, method: Option<SolverMethod>) -> SpectrumResult {
    let t = torus(spin);
    let zt = lattice_zero_threshold(&t, &degrees).unwrap();
    let conn = ConnectionSpec::constant_curvature(t, degrees).unwrap();
    let op = assemble_torus_lattice(&conn, &TorusLattice::square(n).unwrap()).unwrap();
    let mut opts = SolverOptions::lattice(zt);
    if let Some(m) = method {
        opts = opts.with_method(m);
    }
    eigen_smallest_with(&op, count, &opts).unwrap()
}

#[test]
fn landau_links_quantize_flux() {
    for n in [8usize, 12, 16] {
        for d in -3i64..=3 {
            let field = LinkField::landau(n, n, d);
            field.check_flux(d).unwrap();
            assert!((field.total_flux() - 2.0 * PI * d as f64).abs() < 1e-9);
            let p0 = field.plaquette(0, 0);
            for x in 0..n {
                for y in 0..n {
                    assert!((field.plaquette(x, y) - p0).norm() < 1e-10);
                }
            }
            assert!(field.check_flux(d + 1).is_err());
        }
    }
}

#[test]
fn closed_form_landau_level_equals_bound() {
    // first nonzero Landau level 4π|d|/V for V = 4π², d = −1
    let landau = 4.0 * PI * 1.0 / (4.0 * PI * PI);
    assert_eq!(landau, 1.0 / PI);
    let bound = he_real_bound(-1, 1, 4.0 * PI * PI, 1).unwrap();
    assert!((bound - landau).abs() <= 1e-15);
}

#[test]
fn periodic_free_torus_has_four_harmonic_spinors() {
    let s = solve(Periodicity::Periodic, vec![0], 8, 8, None);
    assert_eq!(s.kernel_dimension, 4);
    let modes = s.zero_modes.unwrap();
    assert_eq!((modes.plus, modes.minus), (2, 2));
    assert_eq!(analytic_index(&s).unwrap(), 0);
}

#[test]
fn antiperiodic_free_torus_has_no_kernel() {
    let s = solve(Periodicity::Antiperiodic, vec![0], 16, 8, None);
    assert_eq!(s.kernel_dimension, 0);
    let l = first_nonzero(&s).unwrap();
    // continuum value |p| = √2/2 for half-integer momenta
    assert!((l * l - 0.5).abs() < 0.02 * 0.5, "λ² = {}", l * l);
}

#[test]
fn degree_minus_one_approaches_landau_level() {
    let target = 1.0 / PI;
    let mut errors = Vec::new();
    for n in [16usize, 32] {
        let s = solve(Periodicity::Periodic, vec![-1], n, 10, None);
        assert_eq!(s.kernel_dimension, 2, "N={n}");
        assert_eq!(analytic_index(&s).unwrap(), 0);
        let l = first_nonzero(&s).unwrap();
        errors.push((l * l - target).abs() / target);
    }
    assert!(errors[1] < errors[0], "{errors:?}");
    assert!(errors[1] < 0.06, "{errors:?}");
}

#[test]
fn gram_and_dense_solvers_agree_on_the_lattice() {
    let dense = solve(Periodicity::Antiperiodic, vec![-1], 12, 10, Some(SolverMethod::Dense));
    let iter = solve(Periodicity::Antiperiodic, vec![-1], 12, 10, Some(SolverMethod::ChebyshevSubspace));
    for (a, b) in dense.magnitudes().iter().zip(iter.magnitudes()) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    assert_eq!(dense.kernel_dimension, iter.kernel_dimension);
    assert_eq!(dense.zero_modes, iter.zero_modes);
}

#[test]
fn exact_kernel_falls_back_to_full_operator() {
    let iter = solve(Periodicity::Periodic, vec![0], 8, 8, Some(SolverMethod::ChebyshevSubspace));
    assert_eq!(iter.kernel_dimension, 4);
    assert_eq!(iter.zero_modes.unwrap().plus, 2);
}
