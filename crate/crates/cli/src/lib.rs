//! `magspec` command line: flag parsing, configuration merging and output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use magspec_core::cache::BranchCache;

pub mod commands;
pub mod config;
pub mod output;

use config::{ExperimentConfig, Format, MethodChoice};
use output::Header;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(#[from] magspec_core::Error),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "magspec", version, about = "Boundary spectral asymptotics experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Boundary condition: dirichlet, neumann or robin:ALPHA.
    #[arg(long, global = true)]
    pub bc: Option<String>,
    /// Field strength.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Semiclassical parameter.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub h: Option<f64>,
    /// Spectral level.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    /// Base step of the oscillator eigensolver.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid_step: Option<f64>,
    /// Quadrature tolerance (bound-correction, density-profile) or ODE
    /// tolerance (billiard).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tol: Option<f64>,
    /// Output directory; without it the main table goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Branch cache directory [default: $MAGSPEC_CACHE].
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Worker threads [default: available parallelism].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON file with any of the above (and subcommand options); flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample eigenvalue branches with boundary data.
    Branches(BranchArgs),
    /// Branches against their Airy and tunneling asymptotes.
    Asymptotics(AsymptoticArgs),
    /// Boundary correction N_bound(tau, hbar) in either or both forms.
    BoundCorrection(BoundArgs),
    /// Boundary-layer profile of the spectral-projector diagonal.
    DensityProfile(DensityArgs),
    /// Two-term count against the 2D finite-difference oracle on a strip.
    CountCompare(CountArgs),
    /// Integrate one billiard trajectory.
    Billiard(BilliardArgs),
    /// Qualitative drift pictures with automated checks.
    Portraits(PortraitArgs),
    /// Run the quick invariant suite; exits 1 on any failure.
    Validate,
}

#[derive(Debug, Args)]
pub struct BranchArgs {
    /// Branch indices, `a..b` [default: 0..2].
    #[arg(long)]
    pub n: Option<String>,
    /// Grid `lo..hi:step` [default: -2..6:0.05].
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<String>,
}

#[derive(Debug, Args)]
pub struct AsymptoticArgs {
    /// [default: 0..2]
    #[arg(long)]
    pub n: Option<String>,
    /// [default: -8..4:0.5]
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<String>,
    /// Fit window for the tunneling coefficient [default: 2.5..3.5:0.05].
    #[arg(long)]
    pub window: Option<String>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Comma-separated values [default: 0.2,0.1,0.05].
    #[arg(long)]
    pub hbar: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<MethodChoice>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// Distances from the boundary, `lo..hi:step` [default: 0..1:0.01].
    #[arg(long)]
    pub x1: Option<String>,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    /// Oracle steps as divisors of the magnetic length [default: 8,16].
    #[arg(long)]
    pub oracle_div: Option<String>,
}

#[derive(Debug, Args)]
pub struct BilliardArgs {
    /// Hop parameter of the first hop, |eta| < 1 [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub eta_start: Option<f64>,
    /// Starting boundary point [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub x2: Option<f64>,
    /// Linear potential `c,g1,g2` [default: 1,0,0].
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<String>,
    /// [default: 10]
    #[arg(long)]
    pub duration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PortraitArgs {
    /// Comma-separated tags like `a-linear,d-quadratic`, or `all`.
    #[arg(long)]
    pub portrait: Option<String>,
}

impl Cli {
    /// Flags as a config layer.
    pub fn layer(&self) -> ExperimentConfig {
        let c = &self.common;
        let mut cfg = ExperimentConfig {
            bc: c.bc.clone(),
            mu: c.mu,
            h: c.h,
            tau: c.tau,
            grid_step: c.grid_step,
            tol: c.tol,
            format: c.format,
            out: c.out.clone(),
            cache: c.cache.clone(),
            jobs: c.jobs,
            ..Default::default()
        };
        let name = match &self.command {
            Command::Branches(a) => {
                cfg.n = a.n.clone();
                cfg.eta = a.eta.clone();
                "branches"
            }
            Command::Asymptotics(a) => {
                cfg.n = a.n.clone();
                cfg.eta = a.eta.clone();
                cfg.window = a.window.clone();
                "asymptotics"
            }
            Command::BoundCorrection(a) => {
                cfg.hbar = a.hbar.clone();
                cfg.method = a.method;
                "bound-correction"
            }
            Command::DensityProfile(a) => {
                cfg.x1 = a.x1.clone();
                "density-profile"
            }
            Command::CountCompare(a) => {
                cfg.oracle_div = a.oracle_div.clone();
                "count-compare"
            }
            Command::Billiard(a) => {
                cfg.eta_start = a.eta_start;
                cfg.x2 = a.x2;
                cfg.w = a.w.clone();
                cfg.duration = a.duration;
                "billiard"
            }
            Command::Portraits(a) => {
                cfg.portrait = a.portrait.clone();
                "portraits"
            }
            Command::Validate => "validate",
        };
        cfg.subcommand = Some(name.to_string());
        cfg
    }
}

/// Config file (if any), then flags, then `$MAGSPEC_CACHE` for the cache.
pub fn resolve(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.overlay(&cli.layer());
    if cfg.cache.is_none() {
        cfg.cache = std::env::var_os("MAGSPEC_CACHE").filter(|v| !v.is_empty()).map(PathBuf::from);
    }
    Ok(cfg)
}

fn dispatch(cfg: &mut ExperimentConfig) -> Result<commands::Outcome, CliError> {
    let cache = match &cfg.cache {
        Some(dir) => {
            let mut grid = magspec_core::OscillatorGrid::default();
            grid.step = cfg.grid_step.unwrap_or(grid.step);
            grid.validate()?;
            Some(BranchCache::open(grid, dir)?)
        }
        None => None,
    };
    let name = cfg.subcommand.clone().unwrap_or_default();
    let outcome = match name.as_str() {
        "branches" => commands::branches(cfg, cache.as_ref()),
        "asymptotics" => commands::asymptotics(cfg, cache.as_ref()),
        "bound-correction" => commands::bound_correction(cfg),
        "density-profile" => commands::density_profile(cfg),
        "count-compare" => commands::count_compare(cfg),
        "billiard" => commands::billiard(cfg),
        "portraits" => commands::portraits(cfg),
        "validate" => commands::validate(cfg),
        other => Err(CliError::Usage(format!("unknown subcommand `{other}`"))),
    }?;
    if let Some(c) = &cache {
        c.flush()?;
    }
    Ok(outcome)
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<bool, CliError> {
    let mut cfg = resolve(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let outcome = pool.install(|| dispatch(&mut cfg))?;
    let format = *cfg.format.get_or_insert(Format::Csv);
    let header = Header {
        command: cfg.subcommand.clone().unwrap_or_default(),
        config_hash: cfg.hash(),
        grid: outcome.grid.clone(),
    };
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
            for (stem, report) in &outcome.files {
                let path = dir.join(format!("{stem}.{ext}"));
                let mut buf = Vec::new();
                report.write(&header, format, &mut buf)?;
                std::fs::write(&path, buf)
                    .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
                writeln!(stderr, "wrote {}", path.display())?;
            }
        }
        None => {
            let (_, primary) = &outcome.files[0];
            primary.write(&header, format, stdout)?;
            if outcome.files.len() > 1 {
                writeln!(stderr, "{} more table(s) not shown; pass --out DIR to keep them", outcome.files.len() - 1)?;
            }
        }
    }
    Ok(!outcome.failed)
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(true) => 0,
        Ok(false) => {
            let _ = writeln!(stderr, "validation failed");
            1
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
