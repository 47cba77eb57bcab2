//! Structural invariants of every assembled operator on random inputs.

use std::f64::consts::PI;

use proptest::prelude::*;
use twisted_dirac::assembly::{assemble_circle, assemble_product, assemble_sphere, assemble_torus_lattice};
use twisted_dirac::basis::{CircleBasis, SphereBasis, TorusLattice};
use twisted_dirac::bundle::{stabilized_family, ConnectionSpec};
use twisted_dirac::geometry::{Circle, CircleSpin, ModelManifold, Periodicity};
use twisted_dirac::operator::OperatorMatrix;
use twisted_dirac::HalfInt;

fn check(op: &OperatorMatrix) -> Result<(), TestCaseError> {
    prop_assert!(op.hermiticity_defect() < 1e-12);
    if let Some(d) = op.chirality_defect() {
        prop_assert!(d < 1e-12);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sphere_operators(charges in prop::collection::vec(-3i32..=3, 1..3), radius in 0.3f64..3.0, twice in 3i32..8) {
        let twice = 2 * twice + 1;
        let s = ModelManifold::sphere(radius).unwrap();
        let basis = SphereBasis::for_charges(&charges, HalfInt::from_twice(twice), radius).unwrap();
        let conn = ConnectionSpec::constant_curvature(s, charges).unwrap();
        let op = assemble_sphere(&conn, &basis).unwrap();
        check(&op)?;
        // spectral symmetry
        let mut ev: Vec<f64> = op.to_dense().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let n = ev.len();
        for i in 0..n {
            prop_assert!((ev[i] + ev[n - 1 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn family_operators(t in 0.0f64..=1.0, radius in 0.5f64..2.0) {
        let s = ModelManifold::sphere(radius).unwrap();
        let basis = SphereBasis::for_charges(&[1, -1], HalfInt::from_twice(7), radius).unwrap();
        check(&assemble_sphere(&stabilized_family(t, &s).unwrap(), &basis).unwrap())?;
    }

    #[test]
    fn lattice_operators(d in -3i32..=3, n in 8usize..12, anti in any::<bool>(), l in 1.0f64..8.0) {
        let spin = if anti { Periodicity::Antiperiodic } else { Periodicity::Periodic };
        let t = ModelManifold::flat_torus(l, l * 1.3, [spin, Periodicity::Periodic]).unwrap();
        let conn = ConnectionSpec::constant_curvature(t, vec![d]).unwrap();
        check(&assemble_torus_lattice(&conn, &TorusLattice::square(n).unwrap()).unwrap())?;
    }

    #[test]
    fn product_operators(q in -2i32..=2, k in 1u32..4, bounding in any::<bool>()) {
        let spin = if bounding { CircleSpin::Bounding } else { CircleSpin::NonBounding };
        let cb = CircleBasis::new(k, Circle::new(2.0 * PI, spin).unwrap()).unwrap();
        let s = ModelManifold::sphere(1.0).unwrap();
        let basis = SphereBasis::for_charges(&[q], HalfInt::from_twice(5), 1.0).unwrap();
        let base = assemble_sphere(&ConnectionSpec::constant_curvature(s, vec![q]).unwrap(), &basis).unwrap();
        check(&assemble_product(&base, &cb).unwrap())?;
        let c = assemble_circle(&cb).unwrap();
        check(&assemble_product(&c, &cb).unwrap())?;
    }

    #[test]
    fn halfint_arithmetic(a in -200i32..200, b in -200i32..200) {
        let (x, y) = (HalfInt::from_twice(a), HalfInt::from_twice(b));
        prop_assert_eq!((x + y).twice(), a + b);
        prop_assert_eq!((x - y).twice(), a - b);
        prop_assert_eq!((x + y).value(), x.value() + y.value());
        prop_assert_eq!(x.abs().twice(), a.abs());
        prop_assert_eq!(x.is_integer(), a % 2 == 0);
        prop_assert_eq!(HalfInt::from_f64(x.value()), Some(x));
    }
}
