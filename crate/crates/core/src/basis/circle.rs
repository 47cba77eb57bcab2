use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Circle, CircleSpin};

/// Fourier modes `e^{i(k+δ)·2πx/L}`, `|k| ≤ k_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleBasis {
    k_max: u32,
    circle: Circle,
}

impl CircleBasis {
    pub fn new(k_max: u32, circle: Circle) -> Result<Self> {
        if k_max < 1 {
            return Err(Error::InvalidParameter("k_max must be at least 1".into()));
        }
        Ok(CircleBasis { k_max, circle })
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn circle(&self) -> &Circle {
        &self.circle
    }

    pub fn length(&self) -> f64 {
        self.circle.length()
    }

    pub fn spin(&self) -> CircleSpin {
        self.circle.spin()
    }

    pub fn offset(&self) -> f64 {
        self.circle.spin().frequency_offset()
    }

    pub fn dimension(&self) -> usize {
        2 * self.k_max as usize + 1
    }

    /// Mode labels `-k_max, …, k_max`.
    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let k = self.k_max as i64;
        -k..=k
    }

    /// Eigenvalue `2π(k + δ)/L` of mode `k`.
    pub fn frequency(&self, k: i64) -> f64 {
        2.0 * PI * (k as f64 + self.offset()) / self.length()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies() {
        let c = Circle::new(PI, CircleSpin::NonBounding).unwrap();
        let b = CircleBasis::new(3, c).unwrap();
        assert_eq!(b.dimension(), 7);
        assert!((b.frequency(1) - b.frequency(0) - 2.0).abs() < 1e-15);
        let c = Circle::new(2.0 * PI, CircleSpin::Bounding).unwrap();
        let b = CircleBasis::new(2, c).unwrap();
        assert!((b.frequency(-1) + 0.5).abs() < 1e-15);
        assert!(CircleBasis::new(0, c).is_err());
    }
}
