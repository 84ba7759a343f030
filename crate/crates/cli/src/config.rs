//! Experiment configuration: command-line flags over an optional TOML file over defaults.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use cocycle_lab::arithmetic::Frequency;
use cocycle_lab::reduction::SMALLNESS_THRESHOLD;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Algebra identity suite
    Identities,
    /// Diophantine reports for the frequency
    Arith,
    /// Direct versus closed-form second iterate of the normal form
    Corollary,
    /// KAM reduction of a random chart perturbation
    Reduce,
    /// Two-periodic reduction pipeline on the normal form
    Pipeline,
}

#[derive(Debug, Parser)]
#[command(
    name = "cocycle-lab",
    version,
    about = "Numerical experiments on quasi-periodic SO(3) cocycles"
)]
pub struct Cli {
    pub command: Option<Command>,
    /// Rotation number: a decimal in (0, 1), `golden` or `silver`
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Largest |k| scanned by the Diophantine checks
    #[arg(long = "K")]
    pub k: Option<u32>,
    /// Gauss-orbit depth for `arith`; number of near-constant KAM steps for `pipeline`
    #[arg(long)]
    pub depth: Option<usize>,
    /// Samples per period
    #[arg(long)]
    pub grid: Option<usize>,
    /// Truncation schedule, comma separated
    #[arg(long, value_delimiter = ',')]
    pub trunc: Option<Vec<usize>>,
    /// Obstruction coefficient as `RE,IM`
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub z: Option<Complex64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sup norm of the random perturbation used by `reduce`
    #[arg(long)]
    pub u_norm: Option<f64>,
    /// Fourier support of the random perturbation used by `reduce`
    #[arg(long)]
    pub u_support: Option<usize>,
    /// Smoothness order of the normalizer seam used by `pipeline`
    #[arg(long)]
    pub seam_order: Option<usize>,
    /// TOML file with any of the fields above
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<Command>,
    pub alpha: Option<AlphaValue>,
    pub gamma: Option<f64>,
    pub tau: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<u32>,
    pub depth: Option<usize>,
    pub grid: Option<usize>,
    pub trunc: Option<Vec<usize>>,
    pub z: Option<[f64; 2]>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub u_norm: Option<f64>,
    pub u_support: Option<usize>,
    pub seam_order: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AlphaValue {
    Number(f64),
    Name(String),
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub alpha_spec: String,
    pub alpha: f64,
    pub gamma: f64,
    pub tau: f64,
    #[serde(rename = "K")]
    pub k: u32,
    pub depth: usize,
    pub grid: usize,
    pub trunc: Vec<usize>,
    pub z: Complex64,
    pub tol: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub u_norm: f64,
    pub u_support: usize,
    pub seam_order: usize,
}

impl ExperimentConfig {
    pub fn frequency(&self) -> Result<Frequency, CliError> {
        Frequency::parse(&self.alpha_spec)
            .or_else(|_| Frequency::from_f64(self.alpha))
            .map_err(|e| CliError::Precondition(e.to_string()))
    }
}

pub fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Precondition(format!("{}: {e}", path.display())))
}

pub fn resolve(cli: Cli) -> Result<ExperimentConfig, CliError> {
    let file = match &cli.config {
        Some(p) => load_file(p)?,
        None => FileConfig::default(),
    };
    let command = cli
        .command
        .or(file.command)
        .ok_or_else(|| CliError::Precondition("no command given".into()))?;
    let alpha_spec = match (cli.alpha, file.alpha) {
        (Some(a), _) => a,
        (None, Some(AlphaValue::Number(x))) => format!("{x}"),
        (None, Some(AlphaValue::Name(s))) => s,
        (None, None) => "golden".into(),
    };
    let alpha = parse_alpha(&alpha_spec)?;
    let z = match (cli.z, file.z) {
        (Some(v), _) => v,
        (None, Some([re, im])) => Complex64::new(re, im),
        (None, None) => Complex64::new(1e-2, 0.0),
    };
    let cfg = ExperimentConfig {
        command,
        alpha_spec,
        alpha,
        gamma: cli.gamma.or(file.gamma).unwrap_or(10.0),
        tau: cli.tau.or(file.tau).unwrap_or(2.0),
        k: cli.k.or(file.k).unwrap_or(200),
        depth: cli.depth.or(file.depth).unwrap_or(3),
        grid: cli.grid.or(file.grid).unwrap_or(256),
        trunc: cli
            .trunc
            .or(file.trunc)
            .unwrap_or_else(|| vec![8, 16, 32, 64]),
        z,
        tol: cli.tol.or(file.tol).unwrap_or(1e-10),
        seed: cli.seed.or(file.seed).unwrap_or(20_240_601),
        out: cli.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        u_norm: cli.u_norm.or(file.u_norm).unwrap_or(1e-3),
        u_support: cli.u_support.or(file.u_support).unwrap_or(8),
        seam_order: cli.seam_order.or(file.seam_order).unwrap_or(4),
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| format!("expected RE,IM, got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok(Complex64::new(num(re)?, num(im)?))
}

fn parse_alpha(spec: &str) -> Result<f64, CliError> {
    let x = match Frequency::parse(spec) {
        Ok(f) => f.to_f64(),
        Err(_) => spec
            .trim()
            .parse::<f64>()
            .map_err(|_| CliError::Precondition(format!("cannot read α from {spec:?}")))?,
    };
    Ok(x)
}

fn validate(c: &ExperimentConfig) -> Result<(), CliError> {
    let bad = |m: String| Err(CliError::Precondition(m));
    if !(c.alpha > 0.0 && c.alpha < 1.0) {
        return bad(format!("alpha must lie in (0, 1), got {}", c.alpha));
    }
    if !(c.gamma > 0.0 && c.gamma.is_finite()) {
        return bad(format!("gamma must be positive, got {}", c.gamma));
    }
    if !(c.tau >= 0.0 && c.tau.is_finite()) {
        return bad(format!("tau must be nonnegative, got {}", c.tau));
    }
    if c.k == 0 {
        return bad("K must be at least 1".into());
    }
    if c.depth > 64 {
        return bad(format!("depth must be at most 64, got {}", c.depth));
    }
    if c.grid < 16 || !c.grid.is_power_of_two() || c.grid > 1 << 16 {
        return bad(format!(
            "grid must be a power of two in [16, 65536], got {}",
            c.grid
        ));
    }
    if c.trunc.is_empty() || c.trunc.iter().any(|&n| n == 0 || 2 * n >= c.grid) {
        return bad(format!(
            "truncations must be in [1, grid/2), got {:?}",
            c.trunc
        ));
    }
    if !(c.z.re.is_finite() && c.z.im.is_finite()) || c.z.norm() >= 0.5 {
        return bad(format!("|z| must be below 0.5, got {}", c.z.norm()));
    }
    if c.tol.is_nan() || c.tol <= 0.0 {
        return bad(format!("tol must be positive, got {}", c.tol));
    }
    if !(c.u_norm > 0.0 && c.u_norm <= SMALLNESS_THRESHOLD) {
        return bad(format!(
            "u_norm must be in (0, {SMALLNESS_THRESHOLD}], got {}",
            c.u_norm
        ));
    }
    if c.u_support == 0 || 2 * c.u_support >= c.grid {
        return bad(format!(
            "u_support must be in [1, grid/2), got {}",
            c.u_support
        ));
    }
    if c.seam_order > 8 {
        return bad(format!(
            "seam_order must be at most 8, got {}",
            c.seam_order
        ));
    }
    Ok(())
}
