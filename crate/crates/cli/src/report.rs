//! The run report: everything a run computed, minus wall-clock timings so that
//! reruns serialize identically.

use serde::{Deserialize, Serialize};
use twisted_dirac::bounds::BoundReport;
use twisted_dirac::flow::FlowResult;
use twisted_dirac::geometry::CircleSpin;
use twisted_dirac::index::IndexReport;
use twisted_dirac::operator::{BasisInfo, OperatorMatrix};
use twisted_dirac::spectrum::{SolverOptions, SpectrumResult};

use crate::config::{ExperimentConfig, Kind};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub fn tool_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSummary {
    pub dimension: usize,
    pub nonzeros: usize,
    pub provenance: String,
    pub basis: BasisInfo,
    pub multiplicity_factor: u32,
    pub graded: bool,
    pub hermiticity_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chirality_defect: Option<f64>,
}

impl OperatorSummary {
    pub fn of(op: &OperatorMatrix) -> Self {
        OperatorSummary {
            dimension: op.dimension(),
            nonzeros: op.triplets().len(),
            provenance: op.provenance().to_string(),
            basis: op.basis().clone(),
            multiplicity_factor: op.multiplicity_factor(),
            graded: op.chirality().is_some(),
            hermiticity_defect: op.hermiticity_defect(),
            chirality_defect: op.chirality_defect(),
        }
    }
}

/// A requested bound that has no value in this setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedBound {
    pub bound_name: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductResult {
    pub circle_length: f64,
    pub circle_spin: CircleSpin,
    pub k_max: u32,
    pub circle_spectrum: SpectrumResult,
    pub combined: SpectrumResult,
    /// Smallest `|λ|` of the product, zero modes included.
    pub floor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direct: Option<SpectrumResult>,
    /// Largest gap between matched sorted magnitudes of `combined` and `direct`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_deviation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Verdict {
    pub fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
        self.passed = self.checks.iter().all(|c| c.passed);
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub kind: Kind,
    pub config: ExperimentConfig,
    pub solver: SolverOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<BoundReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped_bounds: Vec<SkippedBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<IndexReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product: Option<ProductResult>,
    pub verdict: Verdict,
}

impl RunReport {
    pub fn new(config: ExperimentConfig, solver: SolverOptions) -> Self {
        RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: tool_version(),
            kind: config.kind,
            config,
            solver,
            operator: None,
            spectrum: None,
            bounds: Vec::new(),
            skipped_bounds: Vec::new(),
            index: None,
            flow: None,
            product: None,
            verdict: Verdict {
                passed: true,
                checks: Vec::new(),
            },
        }
    }
}

/// Wall-clock seconds per stage; written beside the report, never inside it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub stages: Vec<(String, f64)>,
    pub total: f64,
}

impl Timings {
    pub fn record(&mut self, stage: &str, started: std::time::Instant) {
        let secs = started.elapsed().as_secs_f64();
        self.stages.push((stage.to_string(), secs));
        self.total += secs;
    }
}
