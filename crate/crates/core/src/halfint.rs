use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A half-integer stored as its double, so `HalfInt(3)` is 3/2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfInt(pub i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInt(2 * n)
    }

    /// Rounds `x` to the nearest half-integer. Returns `None` if `x` is not
    /// within 1e-9 of one.
    pub fn from_f64(x: f64) -> Option<Self> {
        let twice = (2.0 * x).round();
        if (2.0 * x - twice).abs() > 1e-9 || twice.abs() > i32::MAX as f64 {
            None
        } else {
            Some(HalfInt(twice as i32))
        }
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub const fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// Integer value of `self`; panics if `self` is not an integer.
    pub fn to_int(self) -> i32 {
        assert!(self.is_integer(), "{self} is not an integer");
        self.0 / 2
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        assert_eq!(HalfInt::from_f64(10.5), Some(HalfInt(21)));
        assert_eq!(HalfInt::from_f64(0.3), None);
        assert_eq!(HalfInt(21).to_string(), "21/2");
        assert_eq!(HalfInt(-4).to_string(), "-2");
        assert!(HalfInt(4).is_integer());
        assert_eq!(HalfInt(3) - HalfInt(5), HalfInt(-2));
    }
}
