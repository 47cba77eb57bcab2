use std::f64::consts::PI;

use num::complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WILSON_R: f64 = 1.0;
const FLUX_TOL: f64 = 1e-10;

/// Discretization parameters of the torus backend. Link fields are derived
/// from the connection unless supplied explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusLattice {
    n1: usize,
    n2: usize,
    wilson_r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    links: Option<Vec<LinkField>>,
}

impl TorusLattice {
    pub fn new(n1: usize, n2: usize, wilson_r: f64) -> Result<Self> {
        if n1 < 8 || n2 < 8 {
            return Err(Error::InvalidParameter(format!(
                "lattice {n1}×{n2} is below the 8×8 minimum"
            )));
        }
        if !(wilson_r > 0.0 && wilson_r <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Wilson parameter {wilson_r} outside (0, 1]"
            )));
        }
        Ok(TorusLattice {
            n1,
            n2,
            wilson_r,
            links: None,
        })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, DEFAULT_WILSON_R)
    }

    /// Replaces the derived link fields, one per line-bundle summand.
    pub fn with_links(mut self, links: Vec<LinkField>) -> Self {
        self.links = Some(links);
        self
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn sites(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn wilson_r(&self) -> f64 {
        self.wilson_r
    }

    pub fn links(&self) -> Option<&[LinkField]> {
        self.links.as_deref()
    }

    /// Site index of `(x, y)` with periodic wrapping.
    pub fn site(&self, x: i64, y: i64) -> usize {
        let x = x.rem_euclid(self.n1 as i64) as usize;
        let y = y.rem_euclid(self.n2 as i64) as usize;
        x * self.n2 + y
    }
}

/// U(1) link variables on an `n1 × n2` periodic lattice. `ux[site]` lives on
/// the edge `(x, y) → (x+1, y)`, `uy[site]` on `(x, y) → (x, y+1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkField {
    n1: usize,
    n2: usize,
    ux: Vec<Complex64>,
    uy: Vec<Complex64>,
}

impl LinkField {
    /// Landau-gauge field of degree `d`: every plaquette carries flux
    /// `2πd/(n1 n2)`, with the compensating twist on the last x-column.
    pub fn landau(n1: usize, n2: usize, d: i64) -> Self {
        let phi = 2.0 * PI * d as f64 / (n1 * n2) as f64;
        let mut ux = vec![Complex64::new(1.0, 0.0); n1 * n2];
        let mut uy = vec![Complex64::new(1.0, 0.0); n1 * n2];
        for x in 0..n1 {
            for y in 0..n2 {
                let s = x * n2 + y;
                uy[s] = Complex64::from_polar(1.0, phi * x as f64);
                if x == n1 - 1 {
                    ux[s] = Complex64::from_polar(1.0, -phi * (n1 * y) as f64);
                }
            }
        }
        LinkField { n1, n2, ux, uy }
    }

    pub fn from_phases(n1: usize, n2: usize, ux: Vec<Complex64>, uy: Vec<Complex64>) -> Result<Self> {
        if ux.len() != n1 * n2 || uy.len() != n1 * n2 {
            return Err(Error::InvalidParameter(format!(
                "link arrays must have {} entries",
                n1 * n2
            )));
        }
        Ok(LinkField { n1, n2, ux, uy })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    fn idx(&self, x: usize, y: usize) -> usize {
        (x % self.n1) * self.n2 + (y % self.n2)
    }

    pub fn ux(&self, x: usize, y: usize) -> Complex64 {
        self.ux[self.idx(x, y)]
    }

    pub fn uy(&self, x: usize, y: usize) -> Complex64 {
        self.uy[self.idx(x, y)]
    }

    /// Holonomy around the plaquette with lower-left corner `(x, y)`.
    pub fn plaquette(&self, x: usize, y: usize) -> Complex64 {
        self.ux(x, y) * self.uy(x + 1, y) * self.ux(x, y + 1).conj() * self.uy(x, y).conj()
    }

    /// Sum of principal plaquette angles over the whole lattice.
    pub fn total_flux(&self) -> f64 {
        let mut total = 0.0;
        for x in 0..self.n1 {
            for y in 0..self.n2 {
                total += self.plaquette(x, y).arg();
            }
        }
        total
    }

    /// Checks unit-modulus links, uniform plaquette flux `2πd/(n1 n2)` and
    /// total flux `2πd`.
    pub fn check_flux(&self, d: i64) -> Result<()> {
        let cells = (self.n1 * self.n2) as f64;
        let phi = 2.0 * PI * d as f64 / cells;
        if phi.abs() >= PI {
            return Err(Error::Flux(format!(
                "degree {d} is too large for a {}×{} lattice",
                self.n1, self.n2
            )));
        }
        if let Some(u) = self.ux.iter().chain(&self.uy).find(|u| (u.norm() - 1.0).abs() > FLUX_TOL) {
            return Err(Error::Flux(format!("link variable {u} is not unimodular")));
        }
        let expect = Complex64::from_polar(1.0, phi);
        for x in 0..self.n1 {
            for y in 0..self.n2 {
                let p = self.plaquette(x, y);
                if (p - expect).norm() > FLUX_TOL {
                    return Err(Error::Flux(format!(
                        "plaquette ({x}, {y}) has flux {:.6} instead of {phi:.6}",
                        p.arg()
                    )));
                }
            }
        }
        let total = self.total_flux();
        if (total - 2.0 * PI * d as f64).abs() > FLUX_TOL * cells.max(1.0) {
            return Err(Error::Flux(format!("total flux {total} does not equal 2π·{d}")));
        }
        Ok(())
    }
}
