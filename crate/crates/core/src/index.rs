//! Topological versus analytic index on surfaces.
//!
//! On a surface only the degree-0 term of the Â-genus survives, so the index
//! integral reduces to `σ·deg(E)`. The sign `σ` depends on orientation and
//! grading conventions; it is calibrated once against the analytic count of
//! the degree +1 line bundle on the unit sphere.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::assembly::assemble_sphere;
use crate::basis::SphereBasis;
use crate::bundle::{degree_from_curvature, BundleSpec, ConnectionKind, ConnectionSpec};
use crate::error::{Error, Result};
use crate::geometry::ModelManifold;
use crate::halfint::HalfInt;
use crate::spectrum::{eigen_smallest, zero_mode_count, SpectrumResult, SPECTRAL_ZERO_THRESHOLD};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub topological_index: i64,
    pub analytic_index: i64,
    pub degree_used: i64,
    pub sign_convention: i64,
    pub kernel_dimension: usize,
    #[serde(rename = "match")]
    pub matches: bool,
}

/// The calibrated index sign `σ`.
pub fn sign_convention() -> i64 {
    static SIGN: OnceLock<i64> = OnceLock::new();
    *SIGN.get_or_init(|| calibrate().expect("index sign calibration on the unit sphere"))
}

fn calibrate() -> Result<i64> {
    let sphere = ModelManifold::sphere(1.0)?;
    let conn = ConnectionSpec::constant_curvature(sphere, vec![1])?;
    let basis = SphereBasis::for_charges(&[1], HalfInt::from_twice(5), 1.0)?;
    let op = assemble_sphere(&conn, &basis)?;
    let spec = eigen_smallest(&op, op.dimension(), SPECTRAL_ZERO_THRESHOLD)?;
    let ind = analytic_index(&spec)?;
    if ind.abs() != 1 {
        return Err(Error::Domain(format!("degree +1 calibration gave index {ind}")));
    }
    log::debug!("index sign convention calibrated to {ind}");
    Ok(ind)
}

/// `σ·deg(E)`, after checking the declared degree against the integrated
/// curvature of the bundle's constant-curvature connection.
pub fn topological_index(bundle: &BundleSpec) -> Result<i64> {
    let conn = ConnectionSpec::constant_curvature(bundle.base().clone(), bundle.summand_degrees().to_vec())?;
    topological_index_of(&conn)
}

/// `σ·deg(E)` with the degree integrated from the curvature of `conn`.
pub fn topological_index_of(conn: &ConnectionSpec) -> Result<i64> {
    if !conn.base().is_surface() {
        return Err(Error::Dimension("the index formula is evaluated on surfaces only".into()));
    }
    let declared = conn.bundle().total_degree();
    let integrated = match conn.kind() {
        ConnectionKind::TrivialFrame => 0,
        _ => degree_from_curvature(conn)?,
    };
    if declared != integrated {
        return Err(Error::DegreeMismatch { declared, integrated });
    }
    Ok(sign_convention() * declared)
}

/// `dim ker D⁺ − dim ker D⁻`.
pub fn analytic_index(spec: &SpectrumResult) -> Result<i64> {
    let (plus, minus) = zero_mode_count(spec)?;
    Ok(plus as i64 - minus as i64)
}

pub fn index_check(bundle: &BundleSpec, spec: &SpectrumResult) -> Result<IndexReport> {
    let topological = topological_index(bundle)?;
    report(topological, bundle.total_degree(), spec)
}

/// As [`index_check`], taking the degree from the curvature of `conn`.
pub fn index_check_connection(conn: &ConnectionSpec, spec: &SpectrumResult) -> Result<IndexReport> {
    let topological = topological_index_of(conn)?;
    report(topological, conn.bundle().total_degree(), spec)
}

fn report(topological: i64, degree: i64, spec: &SpectrumResult) -> Result<IndexReport> {
    let analytic = analytic_index(spec)?;
    Ok(IndexReport {
        topological_index: topological,
        analytic_index: analytic,
        degree_used: degree,
        sign_convention: sign_convention(),
        kernel_dimension: spec.kernel_dimension,
        matches: topological == analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_is_unit() {
        assert_eq!(sign_convention().abs(), 1);
    }

    #[test]
    fn trivial_bundle_has_zero_index() {
        let b = BundleSpec::trivial(ModelManifold::sphere(1.0).unwrap(), 4).unwrap();
        assert_eq!(topological_index(&b).unwrap(), 0);
    }

    #[test]
    fn non_surface_rejected() {
        let c = ModelManifold::circle(1.0, crate::geometry::CircleSpin::Bounding).unwrap();
        let conn = ConnectionSpec::trivial_frame(c, 1).unwrap();
        assert!(matches!(topological_index_of(&conn), Err(Error::Dimension(_))));
    }
}
