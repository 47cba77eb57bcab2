use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfint::HalfInt;

/// Global sign of the ladder coefficients. Either choice gives the same
/// symmetric spectrum; this one is used everywhere.
pub const ETH_SIGN: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EthDirection {
    Raise,
    Lower,
}

/// Ladder coefficient of ð (raise, s → s+1) or ð̄ (lower, s → s−1) acting on
/// the harmonic `ₛY_lm` of a sphere of radius `r`:
///
/// ```text
/// raise:  σ √((l−s)(l+s+1)) / r
/// lower: −σ √((l+s)(l−s+1)) / r
/// ```
///
/// The products under the root are integers, so the coefficients vanish
/// exactly at the ends of the ladder.
pub fn eth_coefficient(s: HalfInt, l: HalfInt, direction: EthDirection, r: f64) -> Result<f64> {
    if l < s.abs() || !(l - s).is_integer() {
        return Err(Error::Domain(format!("no harmonic with s = {s}, l = {l}")));
    }
    let (ts, tl) = (s.twice() as i64, l.twice() as i64);
    // (2l ∓ 2s)(2l ± 2s + 2) = 4 · (l ∓ s)(l ± s + 1)
    let prod4 = match direction {
        EthDirection::Raise => (tl - ts) * (tl + ts + 2),
        EthDirection::Lower => (tl + ts) * (tl - ts + 2),
    };
    let magnitude = (prod4 as f64).sqrt() / (2.0 * r);
    Ok(match direction {
        EthDirection::Raise => ETH_SIGN * magnitude,
        EthDirection::Lower => -ETH_SIGN * magnitude,
    })
}

/// A spin-weighted harmonic `ₛY_lm`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SphereMode {
    pub s: HalfInt,
    pub l: HalfInt,
    pub m: HalfInt,
}

impl SphereMode {
    pub fn new(s: HalfInt, l: HalfInt, m: HalfInt) -> Self {
        SphereMode { s, l, m }
    }

    pub fn is_valid(&self) -> bool {
        self.l >= self.s.abs()
            && self.m.abs() <= self.l
            && (self.l - self.s).is_integer()
            && (self.l - self.m).is_integer()
    }
}

/// Truncated spin-weighted harmonic basis on a sphere of radius `radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereBasis {
    l_max: HalfInt,
    spin_weights: Vec<HalfInt>,
    radius: f64,
}

impl SphereBasis {
    pub fn new(l_max: HalfInt, mut spin_weights: Vec<HalfInt>, radius: f64) -> Result<Self> {
        if l_max < HalfInt::from_int(1) {
            return Err(Error::InvalidParameter(format!("l_max = {l_max} must be at least 1")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!("radius {radius} must be positive")));
        }
        spin_weights.sort();
        spin_weights.dedup();
        if let Some(s) = spin_weights.iter().find(|s| s.abs() > l_max) {
            return Err(Error::Truncation(format!("spin weight {s} exceeds l_max = {l_max}")));
        }
        Ok(SphereBasis {
            l_max,
            spin_weights,
            radius,
        })
    }

    /// The weights `(q−1)/2, (q+1)/2` needed by each charge.
    pub fn for_charges(charges: &[i32], l_max: HalfInt, radius: f64) -> Result<Self> {
        let weights = charges
            .iter()
            .flat_map(|&q| [HalfInt::from_twice(q - 1), HalfInt::from_twice(q + 1)])
            .collect();
        Self::new(l_max, weights, radius)
    }

    pub fn l_max(&self) -> HalfInt {
        self.l_max
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spin_weights(&self) -> &[HalfInt] {
        &self.spin_weights
    }

    pub fn contains_weight(&self, s: HalfInt) -> bool {
        self.spin_weights.contains(&s)
    }

    /// Largest `l ≤ l_max` with `l − s` integral.
    pub fn top_l(&self, s: HalfInt) -> HalfInt {
        if (self.l_max - s).is_integer() {
            self.l_max
        } else {
            self.l_max - HalfInt::from_twice(1)
        }
    }

    /// Modes of weight `s`, ordered by (l, m).
    pub fn modes(&self, s: HalfInt) -> Vec<SphereMode> {
        let mut out = Vec::new();
        let top = self.top_l(s);
        let mut l = s.abs();
        while l <= top {
            let mut m = -l;
            while m <= l {
                out.push(SphereMode::new(s, l, m));
                m = m + HalfInt::from_int(1);
            }
            l = l + HalfInt::from_int(1);
        }
        out
    }

    pub fn mode_count(&self, s: HalfInt) -> usize {
        self.modes(s).len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(twice: i32) -> HalfInt {
        HalfInt::from_twice(twice)
    }

    #[test]
    fn lowest_untwisted_coefficient_is_one() {
        let c = eth_coefficient(h(-1), h(1), EthDirection::Raise, 1.0).unwrap();
        assert_eq!(c.abs(), 1.0);
        let c = eth_coefficient(h(-1), h(1), EthDirection::Raise, 2.0).unwrap();
        assert_eq!(c.abs(), 0.5);
    }

    #[test]
    fn ladder_ends_vanish_exactly() {
        for tl in 0..12 {
            let l = h(tl);
            // raising from s = l and lowering from s = -l leave the ladder
            assert_eq!(eth_coefficient(l, l, EthDirection::Raise, 1.3).unwrap(), 0.0);
            assert_eq!(eth_coefficient(-l, l, EthDirection::Lower, 1.3).unwrap(), 0.0);
        }
        // the bottom of the ladder (l = |s|) for s ≤ 0 under lowering
        for ts in [0, -1, -2, -5] {
            let s = h(ts);
            assert_eq!(eth_coefficient(s, s.abs(), EthDirection::Lower, 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn commutator_is_two_s() {
        // (l−s)(l+s+1) − (l+s)(l−s+1) = −2s, so lower∘raise − raise∘lower = 2s/r²
        let r = 1.7;
        let coef = |s: HalfInt, l: HalfInt, d| eth_coefficient(s, l, d, r).unwrap_or(0.0);
        for tl in 0..=10 {
            let l = h(tl);
            let mut s = -l;
            while s <= l {
                let one = HalfInt::from_int(1);
                let lr = coef(s + one, l, EthDirection::Lower) * coef(s, l, EthDirection::Raise);
                let rl = coef(s - one, l, EthDirection::Raise) * coef(s, l, EthDirection::Lower);
                let lhs = lr - rl;
                let rhs = 2.0 * s.value() / (r * r);
                assert!((lhs - rhs).abs() < 1e-12, "s={s} l={l}: {lhs} vs {rhs}");
                s = s + one;
            }
        }
    }

    #[test]
    fn invalid_modes_rejected() {
        assert!(eth_coefficient(h(3), h(1), EthDirection::Raise, 1.0).is_err());
        assert!(eth_coefficient(h(1), h(2), EthDirection::Raise, 1.0).is_err());
    }

    #[test]
    fn mode_counts() {
        let b = SphereBasis::new(h(21), vec![h(-1), h(1)], 1.0).unwrap();
        // Σ_{l=1/2}^{21/2} (2l+1) = 2 + 4 + … + 22
        assert_eq!(b.mode_count(h(-1)), 132);
        let b = SphereBasis::for_charges(&[-1, 1], h(21), 1.0).unwrap();
        assert_eq!(b.spin_weights(), &[h(-2), h(0), h(2)]);
        // integer weights stop at l = 10
        assert_eq!(b.mode_count(h(0)), 121);
        assert_eq!(b.mode_count(h(2)), 120);
        assert!(b.modes(h(0)).iter().all(|m| m.is_valid()));
    }

    #[test]
    fn basis_validation() {
        assert!(SphereBasis::new(h(1), vec![], 1.0).is_err());
        assert!(matches!(
            SphereBasis::new(h(4), vec![h(6)], 1.0),
            Err(Error::Truncation(_))
        ));
    }
}
