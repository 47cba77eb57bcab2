//! Wigner 3j symbols by the Racah sum in exact rational arithmetic, and the
//! triple integrals of spin-weighted harmonics built from them.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use super::sphere::SphereMode;
use crate::halfint::HalfInt;

const FACTORIAL_CACHE: usize = 320;

fn factorial_table() -> &'static [BigInt] {
    static TABLE: OnceLock<Vec<BigInt>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(FACTORIAL_CACHE);
        t.push(BigInt::one());
        for n in 1..FACTORIAL_CACHE {
            let next = &t[n - 1] * BigInt::from(n);
            t.push(next);
        }
        t
    })
}

fn factorial(n: i64) -> BigInt {
    debug_assert!(n >= 0);
    let table = factorial_table();
    if (n as usize) < table.len() {
        return table[n as usize].clone();
    }
    let mut acc = table[table.len() - 1].clone();
    for k in table.len() as i64..=n {
        acc *= BigInt::from(k);
    }
    acc
}

/// Converts `a + b + …` of half-integers to an integer, or `None` if the sum
/// is not integral.
fn int_of(twice: i32) -> Option<i64> {
    (twice % 2 == 0).then_some(twice as i64 / 2)
}

/// The Wigner 3j symbol `(l1 l2 l3; m1 m2 m3)`. Returns 0 for any selection
/// that violates the projection sum, the triangle inequality, or the
/// integrality conditions.
pub fn wigner3j(l1: HalfInt, l2: HalfInt, l3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> f64 {
    let (j1, j2, j3) = (l1.twice(), l2.twice(), l3.twice());
    let (n1, n2, n3) = (m1.twice(), m2.twice(), m3.twice());
    if j1 < 0 || j2 < 0 || j3 < 0 || n1 + n2 + n3 != 0 {
        return 0.0;
    }
    if n1.abs() > j1 || n2.abs() > j2 || n3.abs() > j3 {
        return 0.0;
    }
    if (j1 - n1) % 2 != 0 || (j2 - n2) % 2 != 0 || (j3 - n3) % 2 != 0 {
        return 0.0;
    }
    if j3 > j1 + j2 || j3 < (j1 - j2).abs() {
        return 0.0;
    }
    let Some(sum) = int_of(j1 + j2 + j3) else {
        return 0.0;
    };
    // all remaining combinations are integral once the parity checks pass
    let a = int_of(j1 + j2 - j3).unwrap();
    let b = int_of(j1 - j2 + j3).unwrap();
    let c = int_of(-j1 + j2 + j3).unwrap();
    let f = |twice: i32| int_of(twice).unwrap();

    let delta = BigRational::new(
        factorial(a) * factorial(b) * factorial(c),
        factorial(sum + 1),
    );
    let prefactor = [j1 + n1, j1 - n1, j2 + n2, j2 - n2, j3 + n3, j3 - n3]
        .iter()
        .fold(BigInt::one(), |acc, &t| acc * factorial(f(t)));

    // Σ_k (−1)^k / [k! (j3−j2+k+m1)! (j3−j1+k−m2)! (j1+j2−j3−k)! (j1−k−m1)! (j2−k+m2)!]
    let d1 = f(j3 - j2 + n1);
    let d2 = f(j3 - j1 - n2);
    let u1 = a;
    let u2 = f(j1 - n1);
    let u3 = f(j2 + n2);
    let k_min = 0.max(-d1).max(-d2);
    let k_max = u1.min(u2).min(u3);
    let mut series = BigRational::zero();
    for k in k_min..=k_max {
        let denom = factorial(k)
            * factorial(d1 + k)
            * factorial(d2 + k)
            * factorial(u1 - k)
            * factorial(u2 - k)
            * factorial(u3 - k);
        let term = BigRational::new(BigInt::one(), denom);
        if k % 2 == 0 {
            series += term;
        } else {
            series -= term;
        }
    }
    if series.is_zero() {
        return 0.0;
    }
    let squared = delta * BigRational::from_integer(prefactor) * &series * &series;
    let magnitude = squared.to_f64().unwrap_or(f64::NAN).sqrt();
    // phase (−1)^{j1−j2−m3}
    let phase_exp = f(j1 - j2 - n3);
    let phase = if phase_exp.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let sign = if series.is_negative() { -1.0 } else { 1.0 };
    phase * sign * magnitude
}

/// `∫ ₛ₁Y ₛ₂Y ₛ₃Y dΩ` over the unit sphere. Nonzero only when the spin weights
/// and the projections both sum to zero and the degrees form a triangle.
fn triple_integral(a: SphereMode, b: SphereMode, c: SphereMode) -> f64 {
    if !(a.is_valid() && b.is_valid() && c.is_valid()) {
        return 0.0;
    }
    if (a.s + b.s + c.s) != HalfInt::ZERO || (a.m + b.m + c.m) != HalfInt::ZERO {
        return 0.0;
    }
    let w_m = wigner3j(a.l, b.l, c.l, a.m, b.m, c.m);
    if w_m == 0.0 {
        return 0.0;
    }
    let w_s = wigner3j(a.l, b.l, c.l, -a.s, -b.s, -c.s);
    let dims = (a.l.twice() + 1) as f64 * (b.l.twice() + 1) as f64 * (c.l.twice() + 1) as f64;
    (dims / (4.0 * PI)).sqrt() * w_m * w_s
}

/// Raw triple integral `weight · ∫ Y_a Y_β Y_b dΩ` of three spin-weighted
/// harmonics on the unit sphere.
pub fn coupling_element(
    mode_a: SphereMode,
    mode_b: SphereMode,
    beta_component: SphereMode,
    weight: Complex64,
) -> Complex64 {
    weight * triple_integral(mode_a, beta_component, mode_b)
}

/// `⟨Y_a, Y_f Y_b⟩ = ∫ conj(Y_a) Y_f Y_b dΩ`, using
/// `conj(ₛY_lm) = (−1)^{s+m} ₋ₛY_{l,−m}`.
pub fn matrix_element(a: SphereMode, f: SphereMode, b: SphereMode) -> f64 {
    let conj_a = SphereMode::new(-a.s, a.l, -a.m);
    let sign = if (a.s + a.m).to_int().rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * triple_integral(conj_a, f, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(twice: i32) -> HalfInt {
        HalfInt::from_twice(twice)
    }

    fn int(n: i32) -> HalfInt {
        HalfInt::from_int(n)
    }

    #[test]
    fn closed_form_values() {
        let v = wigner3j(int(1), int(1), int(0), int(0), int(0), int(0));
        assert!((v + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(wigner3j(int(1), int(1), int(1), int(0), int(0), int(0)), 0.0);
        for tj in 0..=8 {
            let j = h(tj);
            let mut m = -j;
            while m <= j {
                let sign = if (j - m).to_int() % 2 == 0 { 1.0 } else { -1.0 };
                let expect = sign / ((tj + 1) as f64).sqrt();
                let v = wigner3j(j, j, int(0), m, -m, int(0));
                assert!((v - expect).abs() < 1e-14, "j={j} m={m}");
                // swapping two columns multiplies by (−1)^{2j}
                let swapped = if tj % 2 == 0 { expect } else { -expect };
                let v = wigner3j(j, int(0), j, m, int(0), -m);
                assert!((v - swapped).abs() < 1e-14, "j={j} m={m}");
                m = m + int(1);
            }
        }
    }

    #[test]
    fn half_integer_value() {
        // (1/2 1/2 1; 1/2 -1/2 0) = 1/√6
        let v = wigner3j(h(1), h(1), int(1), h(1), h(-1), int(0));
        assert!((v - 1.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn selection_rules() {
        assert_eq!(wigner3j(int(1), int(1), int(1), int(1), int(0), int(0)), 0.0);
        assert_eq!(wigner3j(int(1), int(1), int(3), int(0), int(0), int(0)), 0.0);
        assert_eq!(wigner3j(int(1), int(1), h(1), int(0), int(0), int(0)), 0.0);
    }

    #[test]
    fn large_arguments_stay_finite() {
        let v = wigner3j(int(40), int(40), int(40), int(3), int(-7), int(4));
        assert!(v.is_finite() && v.abs() < 1.0);
    }

    #[test]
    fn scalar_harmonic_is_identity_coupling() {
        let y00 = SphereMode::new(int(0), int(0), int(0));
        for (s, l, m) in [(h(1), h(3), h(-1)), (int(0), int(2), int(1)), (int(-1), int(4), int(-3))] {
            let a = SphereMode::new(s, l, m);
            let v = matrix_element(a, y00, a);
            assert!((v - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-14);
        }
    }
}
