//! Command-line runner: reads an experiment configuration, runs it through
//! the core library, and writes a report plus CSV tables.

pub mod config;
pub mod emit;
pub mod error;
pub mod pipeline;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{ExperimentConfig, Format, Kind};
pub use error::CliError;
pub use report::RunReport;

#[derive(Debug, Parser)]
#[command(name = "tdirac", version, about = "Spectra, bounds, index and flows of twisted Dirac operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Smallest eigenvalues of one operator.
    Spectrum(RunArgs),
    /// Eigenvalue bounds against the computed spectrum.
    Bounds(RunArgs),
    /// Analytic against topological index.
    Index(RunArgs),
    /// Eigenvalue flow along the stabilized family on the sphere.
    Flow(RunArgs),
    /// Spectrum of a product with a circle.
    Product(RunArgs),
}

impl Command {
    pub fn kind(&self) -> Kind {
        match self {
            Command::Spectrum(_) => Kind::Spectrum,
            Command::Bounds(_) => Kind::Bounds,
            Command::Index(_) => Kind::Index,
            Command::Flow(_) => Kind::Flow,
            Command::Product(_) => Kind::Product,
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Spectrum(a) | Command::Bounds(a) | Command::Index(a) | Command::Flow(a) | Command::Product(a) => a,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Overrides `[output] format`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Exit with status 4 when the verdict fails.
    #[arg(long)]
    pub verify: bool,
    /// Also write the assembled operator as `operator.json`.
    #[arg(long)]
    pub dump_operator: bool,
    /// Worker threads for parallel stages; all cores when absent.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write `flow.svg` for flow runs.
    #[arg(long)]
    pub plot: bool,
}

/// Runs one subcommand end to end and returns the report.
pub fn execute(command: &Command) -> Result<RunReport, CliError> {
    let args = command.args();
    let cfg = ExperimentConfig::load(&args.config)?;
    if cfg.kind != command.kind() {
        return Err(CliError::Config(format!(
            "configuration kind {} does not match subcommand {}",
            cfg.kind.name(),
            command.kind().name()
        )));
    }
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // a pool already built by an earlier call in this process is kept
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    let out = pipeline::run(&cfg)?;
    let dir = args.out.clone().unwrap_or_else(|| Path::new(&cfg.output.dir).to_path_buf());
    let format = args.format.unwrap_or(cfg.output.format);
    let operator = args.dump_operator.then_some(&out.operator);
    let written = emit::emit(&dir, &out.report, &out.timings, format, operator, args.plot || cfg.output.plot)?;
    for path in &written {
        log::info!("wrote {}", path.display());
    }
    if args.verify && !out.report.verdict.passed {
        let failed: Vec<String> = out.report.verdict.failures().iter().map(|c| format!("{}: {}", c.name, c.detail)).collect();
        return Err(CliError::Verify(failed.join("; ")));
    }
    Ok(out.report)
}
