//! Model spin manifolds and their metric invariants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{sphere_grid, torus_grid, SurfacePoint};

/// Spin structure on a circle. `NonBounding` is the periodic one, whose Dirac
/// spectrum contains zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircleSpin {
    Bounding,
    NonBounding,
}

impl CircleSpin {
    /// Fourier frequency offset δ in units of 2π/L.
    pub fn frequency_offset(self) -> f64 {
        match self {
            CircleSpin::NonBounding => 0.0,
            CircleSpin::Bounding => 0.5,
        }
    }
}

/// Boundary condition of spinors along one cycle of a flat torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Periodicity {
    Periodic,
    Antiperiodic,
}

impl Periodicity {
    pub fn frequency_offset(self) -> f64 {
        match self {
            Periodicity::Periodic => 0.0,
            Periodicity::Antiperiodic => 0.5,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Periodicity::Periodic => 1.0,
            Periodicity::Antiperiodic => -1.0,
        }
    }
}

impl From<CircleSpin> for Periodicity {
    fn from(s: CircleSpin) -> Self {
        match s {
            CircleSpin::NonBounding => Periodicity::Periodic,
            CircleSpin::Bounding => Periodicity::Antiperiodic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    length: f64,
    spin: CircleSpin,
}

impl Circle {
    pub fn new(length: f64, spin: CircleSpin) -> Result<Self> {
        check_positive("circle length", length)?;
        Ok(Circle { length, spin })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spin(&self) -> CircleSpin {
        self.spin
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelManifold {
    Circle(Circle),
    Sphere {
        radius: f64,
    },
    FlatTorus {
        lengths: [f64; 2],
        spin: [Periodicity; 2],
    },
    ProductWithCircle {
        base: Box<ModelManifold>,
        circle: Circle,
    },
}

fn check_positive(what: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be positive, got {x}")))
    }
}

impl ModelManifold {
    pub fn circle(length: f64, spin: CircleSpin) -> Result<Self> {
        Ok(ModelManifold::Circle(Circle::new(length, spin)?))
    }

    pub fn sphere(radius: f64) -> Result<Self> {
        check_positive("sphere radius", radius)?;
        Ok(ModelManifold::Sphere { radius })
    }

    pub fn flat_torus(l1: f64, l2: f64, spin: [Periodicity; 2]) -> Result<Self> {
        check_positive("torus side", l1)?;
        check_positive("torus side", l2)?;
        Ok(ModelManifold::FlatTorus {
            lengths: [l1, l2],
            spin,
        })
    }

    pub fn product_with_circle(base: ModelManifold, circle: Circle) -> Result<Self> {
        if matches!(base, ModelManifold::ProductWithCircle { .. }) {
            return Err(Error::InvalidParameter(
                "product base must not itself be a product".into(),
            ));
        }
        Ok(ModelManifold::ProductWithCircle {
            base: Box::new(base),
            circle,
        })
    }

    /// Re-checks the invariants; used on values that bypassed the constructors
    /// (deserialization).
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelManifold::Circle(c) => check_positive("circle length", c.length),
            ModelManifold::Sphere { radius } => check_positive("sphere radius", *radius),
            ModelManifold::FlatTorus { lengths, .. } => {
                check_positive("torus side", lengths[0])?;
                check_positive("torus side", lengths[1])
            }
            ModelManifold::ProductWithCircle { base, circle } => {
                if matches!(**base, ModelManifold::ProductWithCircle { .. }) {
                    return Err(Error::InvalidParameter(
                        "product base must not itself be a product".into(),
                    ));
                }
                check_positive("circle length", circle.length)?;
                base.validate()
            }
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            ModelManifold::Circle(_) => 1,
            ModelManifold::Sphere { .. } | ModelManifold::FlatTorus { .. } => 2,
            ModelManifold::ProductWithCircle { base, .. } => base.dimension() + 1,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            ModelManifold::Circle(c) => c.length,
            ModelManifold::Sphere { radius } => 4.0 * PI * radius * radius,
            ModelManifold::FlatTorus { lengths, .. } => lengths[0] * lengths[1],
            ModelManifold::ProductWithCircle { base, circle } => base.volume() * circle.length,
        }
    }

    /// Minimum of the scalar curvature. All model metrics have constant
    /// curvature, so this is also its value everywhere.
    pub fn scalar_curvature_min(&self) -> f64 {
        match self {
            ModelManifold::Sphere { radius } => 2.0 / (radius * radius),
            ModelManifold::Circle(_) | ModelManifold::FlatTorus { .. } => 0.0,
            ModelManifold::ProductWithCircle { base, .. } => base.scalar_curvature_min(),
        }
    }

    pub fn genus(&self) -> Result<u32> {
        match self {
            ModelManifold::Sphere { .. } => Ok(0),
            ModelManifold::FlatTorus { .. } => Ok(1),
            other => Err(Error::Dimension(format!(
                "genus is defined for surfaces only, got dimension {}",
                other.dimension()
            ))),
        }
    }

    pub fn is_surface(&self) -> bool {
        self.dimension() == 2
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            ModelManifold::Sphere { radius } => Some(*radius),
            _ => None,
        }
    }

    /// Quadrature grid over a surface, with the Riemannian area element folded
    /// into the weights. Sphere points are (θ, φ); torus points are (x, y).
    pub fn surface_grid(&self, resolution: usize) -> Result<Vec<SurfacePoint>> {
        match self {
            ModelManifold::Sphere { radius } => {
                Ok(sphere_grid(*radius, resolution, 2 * resolution))
            }
            ModelManifold::FlatTorus { lengths, .. } => Ok(torus_grid(
                lengths[0],
                lengths[1],
                resolution,
                resolution,
            )),
            other => Err(Error::Dimension(format!(
                "surface quadrature needs dimension 2, got {}",
                other.dimension()
            ))),
        }
    }

    /// ∫_M R dV evaluated on the surface quadrature grid.
    pub fn integrated_scalar_curvature(&self, resolution: usize) -> Result<f64> {
        let r = self.scalar_curvature_min();
        Ok(self
            .surface_grid(resolution)?
            .iter()
            .map(|p| r * p.weight)
            .sum())
    }
}
