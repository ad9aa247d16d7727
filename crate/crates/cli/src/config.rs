//! Experiment configuration: command-line flags layered over an optional JSON
//! file, then per-command defaults.

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Branch,
    Eigfn,
    Both,
}

/// Everything that defines a run. Every field is optional so that a JSON file
/// can supply any subset; flags given on the command line win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub subcommand: Option<String>,
    pub bc: Option<String>,
    pub mu: Option<f64>,
    pub h: Option<f64>,
    pub tau: Option<f64>,
    pub grid_step: Option<f64>,
    pub tol: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub jobs: Option<usize>,

    /// Branch indices, `a..b`.
    pub n: Option<String>,
    /// `eta` grid, `lo..hi:step`.
    pub eta: Option<String>,
    /// Fit window for the tunneling coefficient, `lo..hi:step`.
    pub window: Option<String>,
    /// Comma-separated list.
    pub hbar: Option<String>,
    pub method: Option<MethodChoice>,
    /// `x1` grid, `lo..hi:step`.
    pub x1: Option<String>,
    /// Oracle grid steps as divisors of the magnetic length, comma-separated.
    pub oracle_div: Option<String>,
    pub eta_start: Option<f64>,
    pub x2: Option<f64>,
    /// Linear potential `c,g1,g2`.
    pub w: Option<String>,
    pub duration: Option<f64>,
    /// Comma-separated portrait tags, or `all`.
    pub portrait: Option<String>,
}

macro_rules! overlay_fields {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(&mut self, top: &ExperimentConfig) {
        overlay_fields!(self, top;
            subcommand, bc, mu, h, tau, grid_step, tol, format, out, cache, jobs,
            n, eta, window, hbar, method, x1, oracle_div, eta_start, x2, w, duration, portrait,
        );
    }

    /// Hash of the resolved experiment. Output location, cache directory and
    /// worker count do not change results and are left out.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.out = None;
        canon.cache = None;
        canon.jobs = None;
        let text = serde_json::to_string(&canon).expect("config serializes");
        short_hex(text.as_bytes())
    }
}

pub fn short_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// `a..b` (inclusive) or a single index.
pub fn parse_indices(s: &str) -> Result<RangeInclusive<usize>, CliError> {
    let bad = || CliError::Usage(format!("expected an index range like 0..2, got `{s}`"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s.trim(), s.trim()),
    };
    let a: usize = a.parse().map_err(|_| bad())?;
    let b: usize = b.parse().map_err(|_| bad())?;
    if b < a {
        return Err(bad());
    }
    Ok(a..=b)
}

/// `lo..hi:step`, with `hi` included when it lands on the grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Usage(format!("bad grid `{s}` (want lo..hi:step): {why}"));
    let (range, step) = s.split_once(':').ok_or_else(|| bad("missing :step"))?;
    let (lo, hi) = range.split_once("..").ok_or_else(|| bad("missing .."))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
        return Err(bad("not finite"));
    }
    if !(step > 0.0) || hi < lo {
        return Err(bad("need step > 0 and hi >= lo"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(bad("more than a million points"));
    }
    Ok((0..count).map(|k| lo + k as f64 * step).collect())
}

/// Comma-separated reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    let out: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("expected comma-separated numbers, got `{s}`")))?;
    if out.is_empty() || out.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Usage(format!("expected finite numbers, got `{s}`")));
    }
    Ok(out)
}
