//! Experiment configuration: JSON file first, command-line flags on top.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use stepwalk::coeffs::Mode;
use stepwalk::parallel::DEFAULT_SEED;
use stepwalk::steps::{StepDistribution, TruncationRule};
use stepwalk::strongapprox::LilKind;
use stepwalk::verify::LIL_BURN_IN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand. Unset flags fall back to `--config`,
/// then to the defaults of [`ExperimentConfig`].
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON file with any of the experiment fields
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed; replicate i uses an avalanche-mixed substream of it
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of steps (or table length, or enumeration size)
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of independent paths
    #[arg(long)]
    pub paths: Option<usize>,
    /// Reinforcement probability in [0, 1)
    #[arg(long)]
    pub p: Option<f64>,
    /// positive | negative
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Step law: rademacher, gaussian:M,SD, uniform:LO,HI, discrete:V1,V2;P1,P2 or JSON
    #[arg(long)]
    pub dist: Option<StepDistribution>,
    /// ASCLT test function (repeatable): cosine, arctan, square, constant:C,
    /// exp_quadratic:G, smoothed_indicator:A,B,W
    #[arg(long = "f", value_name = "FUNCTION")]
    pub f: Vec<String>,
    /// Truncation exponent; enables truncation of innovations at n^alpha
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Output file (stdout when absent)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Geometric checkpoint growth factor (> 1)
    #[arg(long, value_name = "FACTOR")]
    pub checkpoints: Option<f64>,
    /// LIL statistic: walk_hat, walk_check, com_hat_sub, com_hat_crit, com_check
    #[arg(long)]
    pub kind: Option<LilKind>,
    /// First time index entering a running maximum
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Sanity band for running_max/constant, as LO,HI
    #[arg(long, value_name = "LO,HI")]
    pub band: Option<String>,
    /// Acceptance suite to run (repeatable; default all)
    #[arg(long)]
    pub suite: Vec<String>,
    /// Record wall time in the manifest (breaks byte-identical reruns)
    #[arg(long)]
    pub timing: bool,
}

/// Fully resolved experiment parameters, echoed into every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub p: f64,
    pub dist: StepDistribution,
    pub alpha: Option<f64>,
    pub n: usize,
    pub paths: usize,
    pub seed: u64,
    pub checkpoints: Option<f64>,
    pub f: Vec<String>,
    pub kind: Option<LilKind>,
    pub burn_in: usize,
    pub band: Option<(f64, f64)>,
    pub suites: Vec<String>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Positive,
            p: 0.0,
            dist: StepDistribution::Rademacher,
            alpha: None,
            n: 1000,
            paths: 1,
            seed: DEFAULT_SEED,
            checkpoints: None,
            f: Vec::new(),
            kind: None,
            burn_in: LIL_BURN_IN,
            band: None,
            suites: Vec::new(),
            output: None,
            format: Format::Csv,
        }
    }
}

fn parse_band(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s.split_once(',').context("--band expects LO,HI")?;
    let lo: f64 = lo.trim().parse().context("--band lower bound")?;
    let hi: f64 = hi.trim().parse().context("--band upper bound")?;
    if !(lo < hi) {
        bail!("--band needs LO < HI");
    }
    Ok((lo, hi))
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.dist.validate()?;
        Ok(cfg)
    }

    pub fn resolve(flags: &Flags) -> Result<Self> {
        let mut c = match &flags.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        if let Some(v) = flags.seed {
            c.seed = v;
        }
        if let Some(v) = flags.n {
            c.n = v;
        }
        if let Some(v) = flags.paths {
            c.paths = v;
        }
        if let Some(v) = flags.p {
            c.p = v;
        }
        if let Some(v) = flags.mode {
            c.mode = v;
        }
        if let Some(v) = &flags.dist {
            c.dist = v.clone();
        }
        if !flags.f.is_empty() {
            c.f = flags.f.clone();
        }
        if flags.alpha.is_some() {
            c.alpha = flags.alpha;
        }
        if flags.out.is_some() {
            c.output = flags.out.clone();
        }
        if let Some(v) = flags.format {
            c.format = v;
        }
        if flags.checkpoints.is_some() {
            c.checkpoints = flags.checkpoints;
        }
        if flags.kind.is_some() {
            c.kind = flags.kind;
        }
        if let Some(v) = flags.burn_in {
            c.burn_in = v;
        }
        if let Some(b) = &flags.band {
            c.band = Some(parse_band(b)?);
        }
        if !flags.suite.is_empty() {
            c.suites = flags.suite.clone();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            bail!("invalid n: must be at least 1");
        }
        if self.paths == 0 {
            bail!("invalid paths: must be at least 1");
        }
        if !(0.0..1.0).contains(&self.p) {
            bail!("invalid p: {} is outside [0, 1)", self.p);
        }
        if let Some(f) = self.checkpoints {
            if !(f > 1.0) {
                bail!("invalid checkpoints: growth factor {f} must exceed 1");
            }
        }
        self.truncation()?;
        Ok(())
    }

    pub fn truncation(&self) -> Result<TruncationRule> {
        Ok(match self.alpha {
            Some(a) => TruncationRule::with_alpha(a)?,
            None => TruncationRule::disabled(),
        })
    }

    /// Times at which rows are written: every step without `--checkpoints`.
    pub fn checkpoint_grid(&self) -> Vec<usize> {
        match self.checkpoints {
            Some(f) => stepwalk::asclt::geometric_checkpoints(self.n, f),
            None => (1..=self.n).collect(),
        }
    }
}
