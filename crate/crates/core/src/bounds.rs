//! Lower bounds on `λ²` for (twisted) Dirac operators and verdicts against
//! computed spectra.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{first_nonzero, SpectrumResult};

/// Attainment tolerance for the spectral sphere backend (absolute).
pub const SPECTRAL_ATTAINMENT_TOL: f64 = 1e-8;
/// Attainment tolerance for the torus lattice backend (relative).
pub const LATTICE_ATTAINMENT_REL: f64 = 5e-2;
/// Allowed deviation of `R₀·vol` from `8π(1−g)`.
const GAUSS_BONNET_TOL: f64 = 1e-8;

/// `n R₀ / (4(n−1))`.
pub fn friedrich_bound(n: u32, r0: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("dimension {n} must be at least 2")));
    }
    Ok(n as f64 * r0 / (4.0 * (n as f64 - 1.0)))
}

/// `(k+1) R₀ / (4k)` for odd complex dimension `k`, `k R₀ / (4(k−1))` for even.
pub fn kirchberg_bound(k: u32, r0: f64) -> Result<f64> {
    let k_f = k as f64;
    match k {
        0 => Err(Error::Domain("complex dimension must be at least 1".into())),
        k if k % 2 == 1 => Ok((k_f + 1.0) * r0 / (4.0 * k_f)),
        _ => Ok(k_f * r0 / (4.0 * (k_f - 1.0))),
    }
}

/// `−4π deg / (rk vol)`, stated for negative degree only.
pub fn he_complex_bound(deg: i64, rk: u32, vol: f64) -> Result<f64> {
    if deg >= 0 {
        return Err(Error::Applicability(format!(
            "the complex bound needs negative degree, got {deg}"
        )));
    }
    check_rank_volume(rk, vol)?;
    Ok(-4.0 * PI * deg as f64 / (rk as f64 * vol))
}

/// `deg L = deg E − rk (1 − g)`.
pub fn translate_twist(deg_e: i64, rk: u32, g: u32) -> i64 {
    deg_e - rk as i64 * (1 - g as i64)
}

/// `4π(1−g)/vol − 4π deg/(rk vol)`. Computed on the whole domain; see
/// [`he_real_significant`] for where it carries information.
pub fn he_real_bound(deg: i64, rk: u32, vol: f64, g: u32) -> Result<f64> {
    check_rank_volume(rk, vol)?;
    Ok(4.0 * PI * (1.0 - g as f64) / vol - 4.0 * PI * deg as f64 / (rk as f64 * vol))
}

/// `deg < rk (1 − g)`.
pub fn he_real_significant(deg: i64, rk: u32, g: u32) -> bool {
    deg < rk as i64 * (1 - g as i64)
}

/// The real bound rewritten through Gauss–Bonnet: `(R₀/2)(1 − deg/((1−g) rk))`
/// for `g ≠ 1`, `−4π deg/(rk vol)` for `g = 1`.
pub fn gauss_bonnet_form(r0: f64, deg: i64, rk: u32, g: u32, vol: f64) -> Result<f64> {
    check_rank_volume(rk, vol)?;
    if g == 1 {
        return Ok(-4.0 * PI * deg as f64 / (rk as f64 * vol));
    }
    let euler = 8.0 * PI * (1.0 - g as f64);
    if (r0 * vol - euler).abs() > GAUSS_BONNET_TOL * euler.abs().max(1.0) {
        return Err(Error::Domain(format!(
            "R₀·vol = {} differs from 8π(1−g) = {euler}; curvature is not constant",
            r0 * vol
        )));
    }
    Ok(0.5 * r0 * (1.0 - deg as f64 / ((1.0 - g as f64) * rk as f64)))
}

fn check_rank_volume(rk: u32, vol: f64) -> Result<()> {
    if rk == 0 {
        return Err(Error::Domain("rank must be at least 1".into()));
    }
    if !(vol.is_finite() && vol > 0.0) {
        return Err(Error::Domain(format!("volume {vol} must be positive")));
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deg: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rk: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub genus: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Applicability {
    pub condition: String,
    pub holds: bool,
}

/// Comparison of one bound on `λ²` against a computed spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub bound_value: f64,
    pub observed_min_lambda_sq: f64,
    pub tolerance: f64,
    pub satisfied: bool,
    pub attained: bool,
    pub applicability: Vec<Applicability>,
    pub inputs: BoundInputs,
}

impl BoundReport {
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.bound_name = name.into();
        self
    }

    pub fn with_inputs(mut self, inputs: BoundInputs) -> Self {
        self.inputs = inputs;
        self
    }

    pub fn with_applicability(mut self, condition: impl Into<String>, holds: bool) -> Self {
        self.applicability.push(Applicability {
            condition: condition.into(),
            holds,
        });
        self
    }
}

/// Satisfied iff `λ₁² ≥ bound − atol`; attained iff `|λ₁² − bound| ≤ atol`,
/// where `λ₁` is the first nonzero eigenvalue magnitude.
pub fn bound_verdict(spec: &SpectrumResult, bound_value: f64, atol: f64) -> Result<BoundReport> {
    let lambda = first_nonzero(spec)?;
    let observed = lambda * lambda;
    Ok(BoundReport {
        bound_name: String::new(),
        bound_value,
        observed_min_lambda_sq: observed,
        tolerance: atol,
        satisfied: observed >= bound_value - atol,
        attained: (observed - bound_value).abs() <= atol,
        applicability: Vec::new(),
        inputs: BoundInputs::default(),
    })
}
