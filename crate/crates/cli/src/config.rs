//! Experiment configuration: one TOML file per run, parsed strictly.

use std::path::Path;

use serde::{Deserialize, Serialize};
use twisted_dirac::geometry::{CircleSpin, Periodicity};
use twisted_dirac::HalfInt;

use crate::error::CliError;

/// The only schema this build reads.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Spectrum,
    Bounds,
    Index,
    Flow,
    Product,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Spectrum => "spectrum",
            Kind::Bounds => "bounds",
            Kind::Index => "index",
            Kind::Flow => "flow",
            Kind::Product => "product",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: Kind,
    pub manifold: ManifoldConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<ConnectionConfig>,
    pub backend: BackendConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<ProductConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldConfig {
    Sphere { radius: f64 },
    FlatTorus { lengths: [f64; 2], spin: [Periodicity; 2] },
    Circle { length: f64, spin: CircleSpin },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConnectionConfig {
    ConstantCurvature { degrees: Vec<i32> },
    TrivialFrame { rank: usize },
    Interpolated { t: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    /// `l_max` is a half-integer such as 10.5.
    SphereSpectral { l_max: f64 },
    /// The real twist rebuilt as a complex twist by the line bundle of this
    /// degree; the connection must be a single constant-curvature summand.
    SphereComplexTwist { l_max: f64, line_degree: i32 },
    TorusLattice {
        n1: usize,
        n2: usize,
        #[serde(default = "default_wilson_r")]
        wilson_r: f64,
    },
    CircleFourier { k_max: u32 },
}

fn default_wilson_r() -> f64 {
    twisted_dirac::basis::DEFAULT_WILSON_R
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    #[default]
    Auto,
    Dense,
    Chebyshev,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_count")]
    pub count: usize,
    /// Backend default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub method: MethodChoice,
}

fn default_count() -> usize {
    12
}

fn default_max_iterations() -> usize {
    400
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            count: default_count(),
            zero_threshold: None,
            cluster_tol: None,
            residual_tol: None,
            max_iterations: default_max_iterations(),
            seed: None,
            method: MethodChoice::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundName {
    Friedrich,
    Kirchberg,
    HeReal,
    HeComplex,
    GaussBonnet,
}

impl BoundName {
    pub const ALL: [BoundName; 5] = [
        BoundName::Friedrich,
        BoundName::Kirchberg,
        BoundName::HeReal,
        BoundName::HeComplex,
        BoundName::GaussBonnet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundName::Friedrich => "friedrich",
            BoundName::Kirchberg => "kirchberg",
            BoundName::HeReal => "he_real",
            BoundName::HeComplex => "he_complex",
            BoundName::GaussBonnet => "gauss_bonnet",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default = "all_bounds")]
    pub names: Vec<BoundName>,
    /// Absolute tolerance on `λ²`; backend default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

fn all_bounds() -> Vec<BoundName> {
    BoundName::ALL.to_vec()
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            names: all_bounds(),
            tolerance: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    /// Geometric refinement depth of the default grid.
    #[serde(default = "default_levels")]
    pub levels: u32,
    /// Explicit grid; overrides `levels`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_levels() -> u32 {
    8
}

fn default_k() -> usize {
    6
}

fn default_epsilon() -> f64 {
    0.1
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            levels: default_levels(),
            t_grid: None,
            k: default_k(),
            epsilon: default_epsilon(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductConfig {
    pub length: f64,
    pub spin: CircleSpin,
    pub k_max: u32,
    /// Also diagonalize the assembled product operator for comparison.
    #[serde(default)]
    pub direct: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    #[default]
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default)]
    pub format: Format,
    /// Write `flow.svg` for flow runs.
    #[serde(default)]
    pub plot: bool,
}

fn default_dir() -> String {
    "out".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            format: Format::Both,
            plot: false,
        }
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(what: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(config_error(format!("{what} must be positive and finite, got {x}")))
    }
}

/// `l_max` as a half-integer in `[1/2, 60]`.
pub fn parse_l_max(l_max: f64) -> Result<HalfInt, CliError> {
    let h = HalfInt::from_f64(l_max).ok_or_else(|| config_error(format!("l_max = {l_max} is not a half-integer")))?;
    if h.twice() < 1 || h.twice() > 120 {
        return Err(config_error(format!("l_max = {l_max} outside [1/2, 60]")));
    }
    Ok(h)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Range and consistency checks that the schema alone cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_error(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match &self.manifold {
            ManifoldConfig::Sphere { radius } => positive("sphere radius", *radius)?,
            ManifoldConfig::FlatTorus { lengths, .. } => {
                positive("torus side", lengths[0])?;
                positive("torus side", lengths[1])?;
            }
            ManifoldConfig::Circle { length, .. } => positive("circle length", *length)?,
        }
        match (&self.manifold, &self.backend) {
            (ManifoldConfig::Sphere { .. }, BackendConfig::SphereSpectral { l_max })
            | (ManifoldConfig::Sphere { .. }, BackendConfig::SphereComplexTwist { l_max, .. }) => {
                parse_l_max(*l_max)?;
            }
            (ManifoldConfig::FlatTorus { .. }, BackendConfig::TorusLattice { n1, n2, wilson_r }) => {
                for n in [n1, n2] {
                    if !(8..=256).contains(n) {
                        return Err(config_error(format!("lattice size {n} outside [8, 256]")));
                    }
                }
                if !(*wilson_r > 0.0 && *wilson_r <= 1.0) {
                    return Err(config_error(format!("wilson_r = {wilson_r} outside (0, 1]")));
                }
            }
            (ManifoldConfig::Circle { .. }, BackendConfig::CircleFourier { k_max }) => {
                if !(1..=10_000).contains(k_max) {
                    return Err(config_error(format!("k_max = {k_max} outside [1, 10000]")));
                }
            }
            (m, b) => {
                return Err(config_error(format!(
                    "backend {} does not fit manifold {}",
                    backend_name(b),
                    manifold_name(m)
                )))
            }
        }
        match (&self.connection, &self.manifold) {
            (_, ManifoldConfig::Circle { .. }) if self.connection.is_some() => {
                return Err(config_error("a circle carries no connection record"));
            }
            (None, ManifoldConfig::Circle { .. }) => {}
            (None, _) if self.kind != Kind::Flow => {
                return Err(config_error(format!("{} runs need a [connection] record", self.kind.name())));
            }
            (Some(_), _) if self.kind == Kind::Flow => {
                return Err(config_error("flow runs use the built-in family; remove [connection]"));
            }
            (Some(ConnectionConfig::ConstantCurvature { degrees }), _) if degrees.is_empty() => {
                return Err(config_error("degrees must list at least one summand"));
            }
            (Some(ConnectionConfig::TrivialFrame { rank }), _) if *rank == 0 || *rank > 16 => {
                return Err(config_error(format!("rank {rank} outside [1, 16]")));
            }
            (Some(ConnectionConfig::Interpolated { t }), m) => {
                if !(0.0..=1.0).contains(t) {
                    return Err(config_error(format!("t = {t} outside [0, 1]")));
                }
                if !matches!(m, ManifoldConfig::Sphere { .. }) {
                    return Err(config_error("the interpolated family lives on the sphere"));
                }
            }
            _ => {}
        }
        if let (BackendConfig::SphereComplexTwist { .. }, Some(c)) = (&self.backend, &self.connection) {
            if !matches!(c, ConnectionConfig::ConstantCurvature { degrees } if degrees.len() == 1) {
                return Err(config_error("the complex twist backend needs one constant-curvature summand"));
            }
        }
        let s = &self.solver;
        if s.count == 0 || s.count > 100_000 {
            return Err(config_error(format!("count = {} outside [1, 100000]", s.count)));
        }
        for (what, v) in [
            ("zero_threshold", s.zero_threshold),
            ("cluster_tol", s.cluster_tol),
            ("residual_tol", s.residual_tol),
        ] {
            if let Some(v) = v {
                positive(what, v)?;
            }
        }
        if s.max_iterations == 0 {
            return Err(config_error("max_iterations must be at least 1"));
        }
        self.validate_sections()
    }

    fn validate_sections(&self) -> Result<(), CliError> {
        let section = |present: bool, name: &str, kind: Kind| -> Result<(), CliError> {
            if present && self.kind != kind {
                return Err(config_error(format!("[{name}] is only read by {} runs", kind.name())));
            }
            Ok(())
        };
        section(self.bounds.is_some(), "bounds", Kind::Bounds)?;
        section(self.flow.is_some(), "flow", Kind::Flow)?;
        section(self.product.is_some(), "product", Kind::Product)?;
        if matches!(self.kind, Kind::Bounds | Kind::Index) && matches!(self.manifold, ManifoldConfig::Circle { .. }) {
            return Err(config_error(format!("{} runs need a surface", self.kind.name())));
        }
        if let (BackendConfig::SphereComplexTwist { line_degree, .. }, Some(ConnectionConfig::ConstantCurvature { degrees })) =
            (&self.backend, &self.connection)
        {
            // E = L ⊗ K^{-1/2} and deg K^{-1/2} = 1 on the sphere
            if degrees.len() == 1 && *line_degree != degrees[0] - 1 {
                return Err(config_error(format!(
                    "line_degree {line_degree} does not match twist degree {} (expected {})",
                    degrees[0],
                    degrees[0] - 1
                )));
            }
        }
        if let Some(b) = &self.bounds {
            if let Some(t) = b.tolerance {
                positive("bound tolerance", t)?;
            }
        }
        if self.kind == Kind::Flow {
            if !matches!(self.manifold, ManifoldConfig::Sphere { .. }) {
                return Err(config_error("flow runs need a sphere"));
            }
            if !matches!(self.backend, BackendConfig::SphereSpectral { .. }) {
                return Err(config_error("flow runs need the sphere_spectral backend"));
            }
            let f = self.flow.clone().unwrap_or_default();
            if f.k < 4 {
                return Err(config_error(format!("flow k = {} must be at least 4", f.k)));
            }
            positive("flow epsilon", f.epsilon)?;
            if f.levels > 40 {
                return Err(config_error(format!("flow levels = {} exceeds 40", f.levels)));
            }
        }
        if self.kind == Kind::Product {
            let p = self
                .product
                .as_ref()
                .ok_or_else(|| config_error("product runs need a [product] record"))?;
            positive("product circle length", p.length)?;
            if !(1..=10_000).contains(&p.k_max) {
                return Err(config_error(format!("product k_max = {} outside [1, 10000]", p.k_max)));
            }
        }
        Ok(())
    }
}

fn manifold_name(m: &ManifoldConfig) -> &'static str {
    match m {
        ManifoldConfig::Sphere { .. } => "sphere",
        ManifoldConfig::FlatTorus { .. } => "flat_torus",
        ManifoldConfig::Circle { .. } => "circle",
    }
}

fn backend_name(b: &BackendConfig) -> &'static str {
    match b {
        BackendConfig::SphereSpectral { .. } => "sphere_spectral",
        BackendConfig::SphereComplexTwist { .. } => "sphere_complex_twist",
        BackendConfig::TorusLattice { .. } => "torus_lattice",
        BackendConfig::CircleFourier { .. } => "circle_fourier",
    }
}
