//! Turns a validated configuration into operators, spectra and checks.

use std::time::Instant;

use twisted_dirac::assembly::{
    assemble_circle, assemble_product, assemble_sphere, assemble_sphere_complex_twist, assemble_torus_lattice,
    combine_product_spectrum, family_endpoints, lattice_zero_threshold,
};
use twisted_dirac::basis::{CircleBasis, SphereBasis, TorusLattice};
use twisted_dirac::bounds::{
    bound_verdict, friedrich_bound, gauss_bonnet_form, he_complex_bound, he_real_bound, he_real_significant,
    kirchberg_bound, translate_twist, BoundInputs, BoundReport, LATTICE_ATTAINMENT_REL, SPECTRAL_ATTAINMENT_TOL,
};
use twisted_dirac::bundle::{stabilized_family, ConnectionKind, ConnectionSpec};
use twisted_dirac::flow::{default_t_grid, sweep_family_with};
use twisted_dirac::geometry::{Circle, ModelManifold};
use twisted_dirac::index::index_check_connection;
use twisted_dirac::operator::OperatorMatrix;
use twisted_dirac::spectrum::{
    eigen_smallest_with, first_nonzero, ClusterTolerance, SolverMethod, SolverOptions, SpectrumResult,
};
use twisted_dirac::Error;

use crate::config::{
    parse_l_max, BackendConfig, BoundName, ConnectionConfig, ExperimentConfig, Kind, ManifoldConfig, MethodChoice,
};
use crate::error::CliError;
use crate::report::{OperatorSummary, ProductResult, RunReport, SkippedBound, Timings};

/// Hermiticity defect above which an assembled operator is rejected.
const HERMITICITY_TOL: f64 = 1e-10;
/// Relative agreement required between combined and direct product spectra.
const PRODUCT_AGREEMENT_REL: f64 = 1e-8;

/// Everything a run produced.
pub struct RunOutput {
    pub report: RunReport,
    /// The operator that was diagonalized; the `t = 0` endpoint for flows.
    pub operator: OperatorMatrix,
    pub timings: Timings,
}

pub fn manifold(cfg: &ManifoldConfig) -> Result<ModelManifold, CliError> {
    Ok(match cfg {
        ManifoldConfig::Sphere { radius } => ModelManifold::sphere(*radius)?,
        ManifoldConfig::FlatTorus { lengths, spin } => ModelManifold::flat_torus(lengths[0], lengths[1], *spin)?,
        ManifoldConfig::Circle { length, spin } => ModelManifold::circle(*length, *spin)?,
    })
}

pub fn connection(cfg: &ConnectionConfig, base: &ModelManifold) -> Result<ConnectionSpec, CliError> {
    Ok(match cfg {
        ConnectionConfig::ConstantCurvature { degrees } => ConnectionSpec::constant_curvature(base.clone(), degrees.clone())?,
        ConnectionConfig::TrivialFrame { rank } => ConnectionSpec::trivial_frame(base.clone(), *rank)?,
        ConnectionConfig::Interpolated { t } => stabilized_family(*t, base)?,
    })
}

/// Line-bundle charges of the summands, as seen by a basis.
fn charges(conn: &ConnectionSpec) -> Vec<i32> {
    match conn.kind() {
        ConnectionKind::Interpolated { .. } => vec![1, -1],
        _ => conn.bundle().summand_degrees().to_vec(),
    }
}

fn is_lattice(cfg: &ExperimentConfig) -> bool {
    matches!(cfg.backend, BackendConfig::TorusLattice { .. })
}

/// Backend defaults overridden by the `[solver]` record.
pub fn solver_options(cfg: &ExperimentConfig, base: &ModelManifold, conn: Option<&ConnectionSpec>) -> Result<SolverOptions, CliError> {
    let mut opts = match (&cfg.backend, conn) {
        (BackendConfig::TorusLattice { .. }, Some(c)) => SolverOptions::lattice(lattice_zero_threshold(base, &charges(c))?),
        _ => SolverOptions::spectral(),
    };
    let s = &cfg.solver;
    if let Some(zt) = s.zero_threshold {
        opts.zero_threshold = zt;
    }
    if let Some(tol) = s.cluster_tol {
        opts.cluster = ClusterTolerance::Absolute { tol };
    }
    if let Some(tol) = s.residual_tol {
        opts.residual_tol = tol;
    }
    opts.max_iterations = s.max_iterations;
    if let Some(seed) = s.seed {
        opts.seed = seed;
    }
    opts.method = match s.method {
        MethodChoice::Auto => None,
        MethodChoice::Dense => Some(SolverMethod::Dense),
        MethodChoice::Chebyshev => Some(SolverMethod::ChebyshevSubspace),
    };
    Ok(opts)
}

pub fn assemble(cfg: &ExperimentConfig, base: &ModelManifold, conn: Option<&ConnectionSpec>) -> Result<OperatorMatrix, CliError> {
    let op = match (&cfg.backend, conn) {
        (BackendConfig::SphereSpectral { l_max }, Some(c)) => {
            let basis = SphereBasis::for_charges(&charges(c), parse_l_max(*l_max)?, sphere_radius(base))?;
            assemble_sphere(c, &basis)?
        }
        (BackendConfig::SphereComplexTwist { l_max, line_degree }, Some(c)) => {
            let basis = SphereBasis::for_charges(&charges(c), parse_l_max(*l_max)?, sphere_radius(base))?;
            assemble_sphere_complex_twist(*line_degree, base, &basis)?
        }
        (BackendConfig::TorusLattice { n1, n2, wilson_r }, Some(c)) => {
            assemble_torus_lattice(c, &TorusLattice::new(*n1, *n2, *wilson_r)?)?
        }
        (BackendConfig::CircleFourier { k_max }, None) => {
            let ModelManifold::Circle(circle) = base else {
                return Err(CliError::Config("circle_fourier needs a circle".into()));
            };
            assemble_circle(&CircleBasis::new(*k_max, *circle)?)?
        }
        _ => return Err(CliError::Config("backend and connection do not fit together".into())),
    };
    let defect = op.hermiticity_defect();
    if defect > HERMITICITY_TOL {
        return Err(Error::Domain(format!("assembled operator is not Hermitian (defect {defect:e})")).into());
    }
    Ok(op)
}

fn sphere_radius(base: &ModelManifold) -> f64 {
    base.radius().unwrap_or(1.0)
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    let mut timings = Timings::default();
    let started = Instant::now();
    let base = manifold(&cfg.manifold)?;
    if cfg.kind == Kind::Flow {
        return run_flow(cfg, &base, timings);
    }
    let conn = cfg.connection.as_ref().map(|c| connection(c, &base)).transpose()?;
    let opts = solver_options(cfg, &base, conn.as_ref())?;
    let op = assemble(cfg, &base, conn.as_ref())?;
    timings.record("assemble", started);
    log::info!("assembled {} (dimension {})", op.provenance(), op.dimension());

    let started = Instant::now();
    let count = cfg.solver.count.min(op.dimension());
    let spectrum = eigen_smallest_with(&op, count, &opts)?;
    timings.record("solve", started);
    log::info!(
        "solved {} eigenvalues by {:?}, max residual {:.3e}",
        spectrum.len(),
        spectrum.diagnostics.method,
        spectrum.diagnostics.max_residual
    );

    let mut report = RunReport::new(cfg.clone(), opts.clone());
    report.operator = Some(OperatorSummary::of(&op));
    let started = Instant::now();
    match cfg.kind {
        Kind::Spectrum => {
            let target = spectrum.diagnostics.residual_target;
            report.verdict.push(
                "residual",
                spectrum.diagnostics.max_residual <= target,
                format!("max residual {:e} against target {target:e}", spectrum.diagnostics.max_residual),
            );
        }
        Kind::Bounds => {
            let conn = conn.as_ref().expect("validated: bounds runs carry a connection");
            bounds_stage(cfg, &base, conn, &spectrum, &mut report)?;
        }
        Kind::Index => {
            let conn = conn.as_ref().expect("validated: index runs carry a connection");
            if spectrum.kernel_dimension >= spectrum.len() && spectrum.len() < op.dimension() {
                return Err(CliError::Config(format!(
                    "count = {} does not resolve the kernel; raise [solver] count",
                    cfg.solver.count
                )));
            }
            let index = index_check_connection(conn, &spectrum)?;
            let detail = format!(
                "analytic {} against topological {} (kernel {})",
                index.analytic_index, index.topological_index, index.kernel_dimension
            );
            report.verdict.push("index_match", index.matches, detail);
            report.index = Some(index);
        }
        Kind::Product => {
            let product = product_stage(cfg, &op, &spectrum, &opts)?;
            if let Some(dev) = product.max_deviation {
                let scale = product.combined.magnitudes().into_iter().fold(1.0, f64::max);
                report.verdict.push(
                    "product_agreement",
                    dev <= PRODUCT_AGREEMENT_REL * scale,
                    format!("combined and direct magnitudes differ by at most {dev:e}"),
                );
            }
            report.product = Some(product);
        }
        Kind::Flow => unreachable!("handled above"),
    }
    timings.record("checks", started);
    report.spectrum = Some(spectrum);
    Ok(RunOutput { report, operator: op, timings })
}

fn bounds_stage(
    cfg: &ExperimentConfig,
    base: &ModelManifold,
    conn: &ConnectionSpec,
    spectrum: &SpectrumResult,
    report: &mut RunReport,
) -> Result<(), CliError> {
    let n = base.dimension() as u32;
    let r0 = base.scalar_curvature_min();
    let vol = base.volume();
    let g = base.genus()?;
    let rk = conn.rank() as u32;
    let deg = conn.bundle().total_degree();
    let degrees = conn.bundle().summand_degrees();
    let untwisted = match conn.kind() {
        ConnectionKind::TrivialFrame => true,
        ConnectionKind::ConstantCurvature => degrees.iter().all(|&d| d == 0),
        ConnectionKind::Interpolated { .. } => false,
    };
    let einstein = matches!(conn.kind(), ConnectionKind::ConstantCurvature | ConnectionKind::TrivialFrame)
        && degrees.windows(2).all(|w| w[0] == w[1]);
    let names = cfg.bounds.clone().unwrap_or_default().names;
    let tolerance = cfg.bounds.as_ref().and_then(|b| b.tolerance);
    let lambda = first_nonzero(spectrum)?;
    let observed = lambda * lambda;
    for name in names {
        let value: Result<(f64, BoundInputs), Error> = match name {
            BoundName::Friedrich => friedrich_bound(n, r0).map(|v| {
                (v, BoundInputs { r0: Some(r0), n: Some(n), ..Default::default() })
            }),
            BoundName::Kirchberg => kirchberg_bound(n / 2, r0).map(|v| {
                (v, BoundInputs { r0: Some(r0), k: Some(n / 2), ..Default::default() })
            }),
            BoundName::HeReal => he_real_bound(deg, rk, vol, g).map(|v| {
                (v, BoundInputs { deg: Some(deg), rk: Some(rk), vol: Some(vol), genus: Some(g), ..Default::default() })
            }),
            BoundName::HeComplex => {
                let deg_l = match cfg.backend {
                    BackendConfig::SphereComplexTwist { line_degree, .. } => line_degree as i64,
                    _ => translate_twist(deg, rk, g),
                };
                he_complex_bound(deg_l, rk, vol).map(|v| {
                    (v, BoundInputs { deg: Some(deg_l), rk: Some(rk), vol: Some(vol), ..Default::default() })
                })
            }
            BoundName::GaussBonnet => gauss_bonnet_form(r0, deg, rk, g, vol).map(|v| {
                (v, BoundInputs { r0: Some(r0), deg: Some(deg), rk: Some(rk), vol: Some(vol), genus: Some(g), ..Default::default() })
            }),
        };
        let (value, inputs) = match value {
            Ok(v) => v,
            Err(e @ (Error::Applicability(_) | Error::Domain(_))) => {
                report.skipped_bounds.push(SkippedBound {
                    bound_name: name.name().into(),
                    reason: e.to_string(),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let atol = tolerance.unwrap_or(if is_lattice(cfg) {
            LATTICE_ATTAINMENT_REL * value.abs().max(observed)
        } else {
            SPECTRAL_ATTAINMENT_TOL
        });
        let mut b: BoundReport = bound_verdict(spectrum, value, atol)?.named(name.name()).with_inputs(inputs);
        b = match name {
            BoundName::Friedrich | BoundName::Kirchberg => b.with_applicability("untwisted", untwisted),
            BoundName::HeReal | BoundName::GaussBonnet => b
                .with_applicability("hermitian_einstein", einstein)
                .with_applicability("deg < rk (1 - g)", he_real_significant(deg, rk, g)),
            BoundName::HeComplex => b.with_applicability("hermitian_einstein", einstein),
        };
        if b.applicability.iter().all(|a| a.holds) {
            let detail = format!("λ² = {:e} against bound {:e} (tolerance {:e})", b.observed_min_lambda_sq, b.bound_value, atol);
            report.verdict.push(format!("{}_satisfied", b.bound_name), b.satisfied, detail);
        }
        report.bounds.push(b);
    }
    Ok(())
}

fn product_stage(
    cfg: &ExperimentConfig,
    base_op: &OperatorMatrix,
    base_spectrum: &SpectrumResult,
    opts: &SolverOptions,
) -> Result<ProductResult, CliError> {
    let p = cfg.product.as_ref().expect("validated: product runs carry [product]");
    let circle_basis = CircleBasis::new(p.k_max, Circle::new(p.length, p.spin)?)?;
    let circle_op = assemble_circle(&circle_basis)?;
    let circle_spectrum = eigen_smallest_with(&circle_op, circle_op.dimension(), &SolverOptions::spectral())?;
    let combined = combine_product_spectrum(base_spectrum, &circle_spectrum);
    let floor = combined
        .min_magnitude()
        .ok_or(Error::EmptySpectrum { threshold: combined.zero_threshold, count: 0 })?;
    let (direct, max_deviation) = if p.direct {
        let op = assemble_product(base_op, &circle_basis)?;
        let count = combined.len().min(op.dimension());
        let direct = eigen_smallest_with(&op, count, opts)?;
        let mut a = combined.magnitudes();
        let mut b = direct.magnitudes();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let dev = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        (Some(direct), Some(dev))
    } else {
        (None, None)
    };
    Ok(ProductResult {
        circle_length: p.length,
        circle_spin: p.spin,
        k_max: p.k_max,
        circle_spectrum,
        combined,
        floor,
        direct,
        max_deviation,
    })
}

fn run_flow(cfg: &ExperimentConfig, base: &ModelManifold, mut timings: Timings) -> Result<RunOutput, CliError> {
    let started = Instant::now();
    let BackendConfig::SphereSpectral { l_max } = cfg.backend else {
        return Err(CliError::Config("flow runs need the sphere_spectral backend".into()));
    };
    let basis = SphereBasis::for_charges(&[1, -1], parse_l_max(l_max)?, sphere_radius(base))?;
    let opts = solver_options(cfg, base, None)?;
    let flow_cfg = cfg.flow.clone().unwrap_or_default();
    let grid = flow_cfg.t_grid.clone().unwrap_or_else(|| default_t_grid(flow_cfg.levels));
    let (a0, _) = family_endpoints(base, &basis)?;
    timings.record("assemble", started);
    let started = Instant::now();
    let flow = sweep_family_with(base, &basis, &grid, flow_cfg.k, flow_cfg.epsilon, &opts)?;
    timings.record("sweep", started);

    let mut report = RunReport::new(cfg.clone(), opts.clone());
    report.operator = Some(OperatorSummary::of(&a0));
    let zt = flow.zero_threshold;
    report.verdict.push(
        "lipschitz",
        flow.lipschitz_ok,
        format!("adjacent grid points move by at most ‖A_1 − A_0‖ = {:e} times the step", flow.perturbation_norm),
    );
    let start = flow.lambda_min[0];
    report.verdict.push("invertible_at_zero", start > zt, format!("λ_min(0) = {start:e}"));
    let end = *flow.lambda_min.last().expect("grid is nonempty");
    report.verdict.push("kernel_at_one", end <= zt, format!("λ_min(1) = {end:e}, zero threshold {zt:e}"));
    report.flow = Some(flow);
    Ok(RunOutput { report, operator: a0, timings })
}
