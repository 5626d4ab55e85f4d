//! Experiment configuration: defaults, then an optional JSON file, then
//! command-line flags, each overriding the previous layer.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Every field optional so that layers can be merged.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    /// Signal dimension
    #[arg(long)]
    pub n: Option<usize>,
    /// Sparsity
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of measurements
    #[arg(long)]
    pub m: Option<usize>,
    /// Step size (default sqrt(2 pi))
    #[arg(long)]
    pub eta: Option<f64>,
    /// BIHT iterations
    #[arg(long = "iters")]
    #[serde(alias = "iters")]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Base seed; every subcommand is deterministic under it
    #[arg(long = "seed")]
    #[serde(alias = "seed")]
    pub base_seed: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Directory for output files
    #[arg(long = "out")]
    #[serde(alias = "out")]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl ConfigLayer {
    /// `self` wins wherever it has a value.
    pub fn over(self, base: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            n: self.n.or(base.n),
            k: self.k.or(base.k),
            m: self.m.or(base.m),
            eta: self.eta.or(base.eta),
            max_iters: self.max_iters.or(base.max_iters),
            trials: self.trials.or(base.trials),
            base_seed: self.base_seed.or(base.base_seed),
            epsilon: self.epsilon.or(base.epsilon),
            rho: self.rho.or(base.rho),
            delta: self.delta.or(base.delta),
            output_dir: self.output_dir.or(base.output_dir),
            format: self.format.or(base.format),
        }
    }

    pub fn from_file(path: &Path) -> Result<ConfigLayer, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
    }

    /// Flags over the config file (if any) over defaults.
    pub fn resolve(self, file: Option<&Path>) -> Result<ExperimentConfig, CliError> {
        let merged = match file {
            Some(p) => self.over(ConfigLayer::from_file(p)?),
            None => self,
        };
        ExperimentConfig::from_layer(merged)
    }
}

/// Fully resolved configuration. Dimensions remain optional because not every
/// subcommand needs all of them; [`ExperimentConfig::require`] enforces
/// presence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub eta: f64,
    pub max_iters: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub epsilon: Option<f64>,
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub format: Format,
}

impl ExperimentConfig {
    fn from_layer(l: ConfigLayer) -> Result<Self, CliError> {
        let cfg = Self {
            n: l.n,
            k: l.k,
            m: l.m,
            eta: l.eta.unwrap_or_else(bitsense_core::raic::default_eta),
            max_iters: l.max_iters.unwrap_or(20),
            trials: l.trials.unwrap_or(1),
            base_seed: l.base_seed.unwrap_or(0),
            epsilon: l.epsilon,
            rho: l.rho,
            delta: l.delta,
            output_dir: l.output_dir.unwrap_or_else(|| PathBuf::from(".")),
            format: l.format.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [("n", self.n), ("k", self.k), ("m", self.m)] {
            if v == Some(0) {
                return Err(CliError::Usage(format!("--{name} must be positive")));
            }
        }
        if self.trials == 0 {
            return Err(CliError::Usage("--trials must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(CliError::Usage("--iters must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(CliError::Usage("--eta must be positive".into()));
        }
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("rho", self.rho),
            ("delta", self.delta),
        ] {
            if let Some(x) = v {
                if !(x > 0.0 && x < 1.0) {
                    return Err(CliError::Usage(format!(
                        "--{name} must lie in (0, 1), got {x}"
                    )));
                }
            }
        }
        if let (Some(n), Some(k)) = (self.n, self.k) {
            if k > n {
                return Err(CliError::Usage(format!("--k ({k}) exceeds --n ({n})")));
            }
        }
        Ok(())
    }

    pub fn require<T: Copy>(value: Option<T>, flag: &str) -> Result<T, CliError> {
        value.ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
    }
}
