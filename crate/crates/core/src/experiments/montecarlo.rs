//! Monte Carlo comparison of quantile estimators on `−ln χ²₁` data under a
//! deliberately off-centre double-exponential prior.
//!
//! Each replication draws its data and bootstrap resamples from its own
//! stream `stream_rng(seed, r)`, so results do not depend on scheduling.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::posterior::{lower_quantile_index, posterior_from_log_parts};
use crate::quantile::{QuantileLevel, Support};
use crate::random::stream_rng;
use crate::regions::{log_region_probs, CountVector, DirichletParams};

use super::baselines::{bootstrap_interval, clt_interval, Interval};
use super::priors::{laplace_log_prior, neg_log_chi2_quantile, offset_preset};

/// Estimators compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    /// Sample quantile with the normal interval.
    Clt,
    /// Percentile bootstrap of the sample quantile.
    Boot,
    /// Posterior mean on a fixed grid with the data binned onto it.
    Discrete,
    /// Posterior mean with the distinct sample values as support.
    Data,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [
        Estimator::Clt,
        Estimator::Boot,
        Estimator::Discrete,
        Estimator::Data,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Clt => "clt",
            Estimator::Boot => "boot",
            Estimator::Discrete => "discrete",
            Estimator::Data => "data",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown estimator {s:?}")))
    }
}

/// Harness configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub tau: QuantileLevel,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    /// Decay `λ` of the double-exponential prior.
    pub decay: f64,
    /// Offset `γ` of the prior centre above the true quantile.
    pub offset: f64,
    /// Grid `[lo, hi]` with `grid_len` equally spaced points for the
    /// discrete estimator.
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_len: usize,
    pub bootstrap_resamples: usize,
    /// Nominal interval coverage.
    pub level: f64,
    pub execution: Execution,
}

impl McConfig {
    /// Defaults for `τ` and `n`: all estimators, `λ = 0.1`, the preset offset
    /// for `τ` (zero when none ships), a 1000-point grid on `[−10, 40]`,
    /// 1000 bootstrap resamples, 95% intervals and 2000 replications.
    pub fn new(tau: QuantileLevel, n: usize) -> Self {
        Self {
            tau,
            n,
            replications: 2000,
            seed: 0,
            estimators: Estimator::ALL.to_vec(),
            decay: 0.1,
            offset: offset_preset(tau).unwrap_or(0.0),
            grid_lo: -10.0,
            grid_hi: 40.0,
            grid_len: 1000,
            bootstrap_resamples: 1000,
            level: 0.95,
            execution: Execution::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(invalid("at least one replication is required"));
        }
        if self.estimators.is_empty() {
            return Err(invalid("no estimators requested"));
        }
        if self.n < 2 {
            return Err(invalid(format!("sample size {} is below 2", self.n)));
        }
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return Err(invalid(format!(
                "prior decay {} is not positive",
                self.decay
            )));
        }
        if !self.offset.is_finite() {
            return Err(invalid("prior offset is not finite"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(invalid(format!("level {} outside (0, 1)", self.level)));
        }
        Ok(())
    }
}

/// Aggregate metrics of one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub estimator: Estimator,
    pub n: usize,
    pub tau: f64,
    pub bias: f64,
    /// `√n` times the standard deviation of the estimates (divisor `R`, so
    /// that `rmse² = bias² + se²` holds exactly).
    pub sqrt_n_se: f64,
    pub rmse: f64,
    pub coverage: f64,
    /// Replications in which the estimator failed and was left out.
    pub failures: usize,
}

/// Everything the harness needs that is shared across replications.
struct Fixed {
    center: f64,
    grid: Support,
    alpha: DirichletParams,
    grid_log_prior: Vec<f64>,
    grid_log_c_prior: Vec<f64>,
}

/// Runs the harness and returns one row per requested estimator, in the
/// order requested.
pub fn run_monte_carlo(cfg: &McConfig) -> Result<Vec<McRow>> {
    cfg.validate()?;
    let truth = neg_log_chi2_quantile(cfg.tau);
    let center = truth + cfg.offset;
    let grid = Support::linspace(cfg.grid_lo, cfg.grid_hi, cfg.grid_len)?;
    let alpha = DirichletParams::uniform(grid.len(), 1.0 / grid.len() as f64)?;
    let grid_log_c_prior = if cfg.estimators.contains(&Estimator::Discrete) {
        log_region_probs(&alpha, cfg.tau)?.log_probs().to_vec()
    } else {
        Vec::new()
    };
    let fixed = Fixed {
        center,
        grid_log_prior: laplace_log_prior(grid.values(), center, cfg.decay),
        grid,
        alpha,
        grid_log_c_prior,
    };

    let outcomes: Vec<Vec<Option<Interval>>> = cfg
        .execution
        .map_indexed(cfg.replications, |r| replicate(cfg, &fixed, r as u64));

    Ok(cfg
        .estimators
        .iter()
        .enumerate()
        .map(|(e, &estimator)| {
            let intervals: Vec<Interval> = outcomes.iter().filter_map(|o| o[e]).collect();
            summarize(estimator, cfg, truth, &intervals, outcomes.len())
        })
        .collect())
}

/// Draws `n` values of `−ln χ²₁ = −2 ln |N|`.
pub fn simulate_neg_log_chi2<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            -2.0 * z.abs().ln()
        })
        .collect()
}

fn replicate(cfg: &McConfig, fixed: &Fixed, r: u64) -> Vec<Option<Interval>> {
    let mut rng = stream_rng(cfg.seed, r);
    let data = simulate_neg_log_chi2(cfg.n, &mut rng);
    cfg.estimators
        .iter()
        .map(|e| {
            match e {
                Estimator::Clt => clt_interval(&data, cfg.tau, cfg.level),
                Estimator::Boot => {
                    bootstrap_interval(&data, cfg.tau, cfg.bootstrap_resamples, cfg.level, &mut rng)
                }
                Estimator::Discrete => discrete_estimate(cfg, fixed, &data),
                Estimator::Data => data_estimate(cfg, fixed.center, &data),
            }
            .ok()
        })
        .collect()
}

/// Posterior mean and equal-tailed credible interval from a pmf.
fn credible(pmf: &[f64], points: &[f64], level: f64) -> Interval {
    let tail = (1.0 - level) / 2.0;
    Interval {
        point: pmf.iter().zip(points).map(|(p, s)| p * s).sum(),
        lo: points[lower_quantile_index(pmf, tail)],
        hi: points[lower_quantile_index(pmf, 1.0 - tail)],
    }
}

/// Bins the data to the nearest grid point; values beyond the grid go to the
/// end points.
fn discrete_estimate(cfg: &McConfig, fixed: &Fixed, data: &[f64]) -> Result<Interval> {
    let counts = CountVector::from_indices(
        fixed.grid.len(),
        data.iter().map(|&z| fixed.grid.nearest_index(z)),
    )?;
    let post_c = log_region_probs(&fixed.alpha.add_counts(&counts)?, cfg.tau)?;
    let post = posterior_from_log_parts(
        &fixed.grid_log_prior,
        &fixed.grid_log_c_prior,
        post_c.log_probs(),
    );
    Ok(credible(&post.pmf, fixed.grid.values(), cfg.level))
}

/// Support is the distinct sample values with multiplicities as counts, and
/// the prior heights are renormalized over those points.
fn data_estimate(cfg: &McConfig, center: f64, data: &[f64]) -> Result<Interval> {
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let mut points: Vec<f64> = Vec::with_capacity(sorted.len());
    let mut counts: Vec<u64> = Vec::with_capacity(sorted.len());
    for z in sorted {
        if points.last() == Some(&z) {
            *counts.last_mut().expect("nonempty") += 1;
        } else {
            points.push(z);
            counts.push(1);
        }
    }
    let j = points.len();
    let alpha = DirichletParams::uniform(j, 1.0 / j as f64)?;
    let counts = CountVector::new(counts);
    let prior_c = log_region_probs(&alpha, cfg.tau)?;
    let post_c = log_region_probs(&alpha.add_counts(&counts)?, cfg.tau)?;
    let post = posterior_from_log_parts(
        &laplace_log_prior(&points, center, cfg.decay),
        prior_c.log_probs(),
        post_c.log_probs(),
    );
    Ok(credible(&post.pmf, &points, cfg.level))
}

fn summarize(
    estimator: Estimator,
    cfg: &McConfig,
    truth: f64,
    intervals: &[Interval],
    attempted: usize,
) -> McRow {
    let m = intervals.len() as f64;
    let bias = intervals.iter().map(|iv| iv.point - truth).sum::<f64>() / m;
    let mean = truth + bias;
    let var = intervals
        .iter()
        .map(|iv| (iv.point - mean).powi(2))
        .sum::<f64>()
        / m;
    let coverage = intervals.iter().filter(|iv| iv.covers(truth)).count() as f64 / m;
    McRow {
        estimator,
        n: cfg.n,
        tau: cfg.tau.get(),
        bias,
        sqrt_n_se: (cfg.n as f64 * var).sqrt(),
        rmse: (bias * bias + var).sqrt(),
        coverage,
        failures: attempted - intervals.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(tau: f64, n: usize, reps: usize) -> McConfig {
        let mut c = McConfig::new(QuantileLevel::new(tau).unwrap(), n);
        c.replications = reps;
        c.bootstrap_resamples = 200;
        c.seed = 17;
        c
    }

    #[test]
    fn single_replication_identities() {
        let rows = run_monte_carlo(&cfg(0.5, 20, 1)).unwrap();
        assert_eq!(rows.len(), 4);
        for row in rows {
            assert_eq!(row.failures, 0);
            assert!((row.rmse - row.bias.abs()).abs() < 1e-12, "{row:?}");
            assert!(row.coverage == 0.0 || row.coverage == 1.0);
        }
    }

    #[test]
    fn rmse_decomposes_and_strategies_agree() {
        let mut c = cfg(0.9, 30, 40);
        c.execution = Execution::Sequential;
        let seq = run_monte_carlo(&c).unwrap();
        c.execution = Execution::Parallel;
        let par = run_monte_carlo(&c).unwrap();
        assert_eq!(seq, par);
        for row in seq {
            let lhs = row.rmse * row.rmse;
            let rhs = row.bias * row.bias + row.sqrt_n_se * row.sqrt_n_se / row.n as f64;
            assert!((lhs - rhs).abs() < 1e-9);
            assert!((0.0..=1.0).contains(&row.coverage));
        }
    }

    #[test]
    fn simulated_data_has_the_right_quantile() {
        let mut rng = stream_rng(5, 0);
        let xs = simulate_neg_log_chi2(200_000, &mut rng);
        let tau = QuantileLevel::new(0.9).unwrap();
        let truth = neg_log_chi2_quantile(tau);
        let below = xs.iter().filter(|&&x| x <= truth).count() as f64 / xs.len() as f64;
        assert!((below - 0.9).abs() < 0.003, "{below}");
    }

    #[test]
    fn estimator_names_round_trip() {
        for e in Estimator::ALL {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
        assert!("kde".parse::<Estimator>().is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut c = cfg(0.5, 20, 0);
        assert!(run_monte_carlo(&c).is_err());
        c.replications = 1;
        c.estimators.clear();
        assert!(run_monte_carlo(&c).is_err());
    }
}
