//! Run configuration, read from TOML. Every field is optional so that
//! command-line flags can fill or override any of them; unknown keys are
//! rejected.
//!
//! ```toml
//! workflow = "hier"
//! seed = 7
//! out = "results"
//! tau = 0.5
//! data = "scores.csv"
//!
//! [support]
//! lo = 0
//! hi = 350
//! step = 1
//!
//! [prior]
//! builder = "cricket"
//! variant = "per-tau"
//!
//! [gibbs]
//! burn-in = 1000
//! kept = 5000
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hierarchy::Schedule;
use crate::quantile::{QuantileLevel, Support};

use super::ingest::SupportRule;
use super::montecarlo::{Estimator, McConfig};
use super::priors::CricketVariant;

/// Default levels of the quantile-function workflow.
pub const DEFAULT_TAU_GRID: [f64; 11] = [0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Workflow {
    Single,
    Hier,
    Censored,
    QuantileFunction,
    Mc,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub workflow: Option<Workflow>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tau: Option<f64>,
    pub tau_grid: Option<Vec<f64>>,
    pub data: Option<PathBuf>,
    pub support: Option<SupportConfig>,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub gibbs: GibbsConfig,
    #[serde(default)]
    pub mc: McSection,
}

/// Either `lo`/`hi`/`step` or `from-data = true`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SupportConfig {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub step: Option<f64>,
    #[serde(default)]
    pub from_data: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorBuilder {
    /// Flat quantile prior, constant `α` and constant `λ`.
    #[default]
    Uniform,
    /// Exponentially decaying `α` with a Gaussian-bump `λ`.
    Cricket,
    /// Double-exponential quantile prior around `center`.
    Discrete,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantConfig {
    #[default]
    Median,
    PerTau,
}

impl From<VariantConfig> for CricketVariant {
    fn from(v: VariantConfig) -> Self {
        match v {
            VariantConfig::Median => CricketVariant::Median,
            VariantConfig::PerTau => CricketVariant::PerTau,
        }
    }
}

/// Prior choice. `alpha` is the per-point concentration of the uniform and
/// discrete builders (default `1/J`); `lambda` is their per-point hyperprior
/// weight (default 1). `center` and `decay` shape the discrete builder.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PriorConfig {
    #[serde(default)]
    pub builder: PriorBuilder,
    #[serde(default)]
    pub variant: VariantConfig,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub center: Option<f64>,
    pub decay: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GibbsConfig {
    pub burn_in: Option<usize>,
    pub kept: Option<usize>,
    pub thin: Option<usize>,
    /// Run subpopulation updates on one thread.
    #[serde(default)]
    pub sequential: bool,
}

impl GibbsConfig {
    pub fn schedule(&self) -> Result<Schedule> {
        let d = Schedule::default();
        Schedule::new(
            self.burn_in.unwrap_or(d.burn_in),
            self.kept.unwrap_or(d.kept),
            self.thin.unwrap_or(d.thin),
        )
    }

    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct McSection {
    pub n: Option<usize>,
    pub replications: Option<usize>,
    pub estimators: Option<Vec<String>>,
    pub decay: Option<f64>,
    pub offset: Option<f64>,
    pub grid_lo: Option<f64>,
    pub grid_hi: Option<f64>,
    pub grid_len: Option<usize>,
    pub bootstrap_resamples: Option<usize>,
    pub level: Option<f64>,
    #[serde(default)]
    pub sequential: bool,
}

impl RunConfig {
    /// Parses TOML text. Relative paths are left as written.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.data, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn tau(&self) -> Result<QuantileLevel> {
        QuantileLevel::new(self.tau.unwrap_or(0.5))
    }

    pub fn tau_grid(&self) -> Result<Vec<QuantileLevel>> {
        self.tau_grid
            .as_deref()
            .unwrap_or(&DEFAULT_TAU_GRID)
            .iter()
            .map(|&t| QuantileLevel::new(t))
            .collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Support rule; without a `[support]` table the grid `0, 1, …, 350` is
    /// used.
    pub fn support_rule(&self) -> Result<SupportRule> {
        let Some(s) = &self.support else {
            return Ok(SupportRule::Grid {
                lo: 0.0,
                hi: 350.0,
                step: 1.0,
            });
        };
        match (s.from_data, s.lo, s.hi) {
            (true, None, None) if s.step.is_none() => Ok(SupportRule::FromData),
            (true, ..) => Err(Error::Config(
                "support: from-data cannot be combined with lo/hi/step".into(),
            )),
            (false, Some(lo), Some(hi)) => Ok(SupportRule::Grid {
                lo,
                hi,
                step: s.step.unwrap_or(1.0),
            }),
            _ => Err(Error::Config(
                "support: need lo and hi, or from-data".into(),
            )),
        }
    }

    /// Support without data, for workflows that may run on the prior alone.
    pub fn grid_support(&self) -> Result<Support> {
        match self.support_rule()? {
            SupportRule::Grid { lo, hi, step } => Support::grid(lo, hi, step),
            SupportRule::FromData => Err(Error::Config(
                "a from-data support needs a data file".into(),
            )),
        }
    }

    /// Monte Carlo harness settings at level `τ`.
    pub fn mc_config(&self) -> Result<McConfig> {
        let m = &self.mc;
        let mut c = McConfig::new(self.tau()?, m.n.unwrap_or(320));
        c.seed = self.seed();
        if let Some(v) = m.replications {
            c.replications = v;
        }
        if let Some(v) = &m.estimators {
            c.estimators = v
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<Estimator>>>()?;
        }
        if let Some(v) = m.decay {
            c.decay = v;
        }
        if let Some(v) = m.offset {
            c.offset = v;
        }
        if let Some(v) = m.grid_lo {
            c.grid_lo = v;
        }
        if let Some(v) = m.grid_hi {
            c.grid_hi = v;
        }
        if let Some(v) = m.grid_len {
            c.grid_len = v;
        }
        if let Some(v) = m.bootstrap_resamples {
            c.bootstrap_resamples = v;
        }
        if let Some(v) = m.level {
            c.level = v;
        }
        if m.sequential {
            c.execution = Execution::Sequential;
        }
        Ok(c)
    }
}
