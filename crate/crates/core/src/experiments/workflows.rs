//! End-to-end runs: read data, build priors, fit, and write the report files.

use std::path::PathBuf;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::hierarchy::{gibbs_censored, gibbs_hierarchical, Chain, HyperParams, SubpopData};
use crate::posterior::{posterior_beta, posterior_summary, QuantileSpec};
use crate::quantile::{QuantileLevel, Support};
use crate::random::stream_rng;
use crate::regions::{CountVector, DirichletParams};

use super::baselines::lower_sample_quantile;
use super::config::{PriorBuilder, RunConfig, Workflow};
use super::ingest::{ingest_scores, Dataset, IngestReport};
use super::montecarlo::run_monte_carlo;
use super::priors::{cricket_priors, laplace_log_prior};
use super::report::{
    write_mc_table, write_mixing_pmf, write_posterior, write_quantile_function, write_shrinkage,
    write_summary, GroupSummary, QuantilePoint, ShrinkageRow,
};

/// Files written by a run, plus the ingest report when data were read.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub ingest: Option<IngestReport>,
}

/// Runs `workflow` with the settings in `cfg`.
pub fn run(workflow: Workflow, cfg: &RunConfig) -> Result<RunOutput> {
    match workflow {
        Workflow::Single => run_single(cfg),
        Workflow::Hier => run_hierarchical(cfg, false),
        Workflow::Censored => run_hierarchical(cfg, true),
        Workflow::QuantileFunction => run_quantile_function(cfg),
        Workflow::Mc => run_mc(cfg),
    }
}

fn load_data(cfg: &RunConfig) -> Result<Option<Dataset>> {
    cfg.data
        .as_deref()
        .map(|p| ingest_scores(p, &cfg.support_rule()?))
        .transpose()
}

fn load_required(cfg: &RunConfig) -> Result<Dataset> {
    load_data(cfg)?.ok_or_else(|| Error::Config("this workflow needs a data file".into()))
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!(
            "prior {name} must be positive, got {v}"
        )))
    }
}

/// Quantile prior pmf on the support: double exponential for the discrete
/// builder, flat otherwise.
fn quantile_prior(cfg: &RunConfig, support: &Support, tau: QuantileLevel) -> Result<QuantileSpec> {
    match cfg.prior.builder {
        PriorBuilder::Discrete => {
            let center = cfg
                .prior
                .center
                .ok_or_else(|| Error::Config("discrete prior needs a center".into()))?;
            let decay = positive("decay", cfg.prior.decay.unwrap_or(0.1))?;
            QuantileSpec::from_log_weights(tau, &laplace_log_prior(support.values(), center, decay))
        }
        PriorBuilder::Uniform | PriorBuilder::Cricket => QuantileSpec::uniform(tau, support.len()),
    }
}

/// `α` and `λ` for the chosen builder. The discrete builder scales the
/// double-exponential pmf `b` to `λ_j = λ · J · b_j`.
fn hyper_params(cfg: &RunConfig, support: &Support, tau: QuantileLevel) -> Result<HyperParams> {
    let j = support.len();
    if cfg.prior.builder == PriorBuilder::Cricket {
        let (alpha, lambda) = cricket_priors(support, tau, cfg.prior.variant.into())?;
        return HyperParams::new(alpha, lambda);
    }
    let alpha = DirichletParams::uniform(
        j,
        positive("alpha", cfg.prior.alpha.unwrap_or(1.0 / j as f64))?,
    )?;
    let scale = positive("lambda", cfg.prior.lambda.unwrap_or(1.0))?;
    let lambda = match cfg.prior.builder {
        PriorBuilder::Discrete => quantile_prior(cfg, support, tau)?
            .prior()
            .iter()
            .map(|b| scale * j as f64 * b)
            .collect(),
        _ => vec![scale; j],
    };
    HyperParams::new(alpha, lambda)
}

fn likelihood_alpha(
    cfg: &RunConfig,
    support: &Support,
    tau: QuantileLevel,
) -> Result<DirichletParams> {
    Ok(hyper_params(cfg, support, tau)?.alpha)
}

/// Exact single-population posterior for each group, or for the prior alone
/// when there is no data file.
pub fn run_single(cfg: &RunConfig) -> Result<RunOutput> {
    let tau = cfg.tau()?;
    let data = load_data(cfg)?;
    let (support, groups) = match &data {
        Some(d) => (d.support.clone(), d.groups.clone()),
        None => {
            let s = cfg.grid_support()?;
            let prior_only = SubpopData::new("prior", CountVector::zeros(s.len()), Vec::new());
            (s, vec![prior_only])
        }
    };
    if let Some(g) = groups.iter().find(|g| !g.censor_lows.is_empty()) {
        return Err(invalid(format!(
            "group {:?} has censored scores; use the censored workflow",
            g.id
        )));
    }
    let spec = quantile_prior(cfg, &support, tau)?;
    let alpha = likelihood_alpha(cfg, &support, tau)?;
    let out = cfg.out_dir();
    let mut files = Vec::new();
    let mut summaries = Vec::new();
    for g in &groups {
        let post = posterior_beta(&spec, &alpha, &g.counts).map_err(|e| Error::Subpopulation {
            id: g.id.clone(),
            source: Box::new(e),
        })?;
        files.push(write_posterior(&out, &g.id, &support, &post.pmf)?);
        summaries.push(group_summary(g, &post.pmf, &support)?);
    }
    files.push(write_summary(&out, &summaries)?);
    Ok(RunOutput {
        files,
        ingest: data.map(|d| d.report),
    })
}

fn group_summary(g: &SubpopData, pmf: &[f64], support: &Support) -> Result<GroupSummary> {
    let s = posterior_summary(pmf, support, &[0.05, 0.95])?;
    Ok(GroupSummary {
        group: g.id.clone(),
        n: g.size(),
        censored: g.censor_lows.len(),
        mean: s.mean,
        q05: s.quantiles[0].1,
        q95: s.quantiles[1].1,
    })
}

fn fit(
    data: &Dataset,
    cfg: &RunConfig,
    tau: QuantileLevel,
    seed: u64,
    censored: bool,
) -> Result<Chain> {
    let hp = hyper_params(cfg, &data.support, tau)?;
    let schedule = cfg.gibbs.schedule()?;
    let exec = cfg.gibbs.execution();
    if censored {
        gibbs_censored(&data.groups, &hp, tau, &schedule, seed, exec)
    } else {
        gibbs_hierarchical(&data.groups, &hp, tau, &schedule, seed, exec)
    }
}

/// Hierarchical fit at one level, writing per-group posteriors, the mixing
/// pmf, the shrinkage table and a summary.
pub fn run_hierarchical(cfg: &RunConfig, censored: bool) -> Result<RunOutput> {
    let tau = cfg.tau()?;
    let data = load_required(cfg)?;
    let chain = fit(&data, cfg, tau, cfg.seed(), censored)?;
    let support = &data.support;
    let out = cfg.out_dir();
    let mut files = Vec::new();
    let mut summaries = Vec::new();
    let mut shrinkage = Vec::new();
    for (i, g) in data.groups.iter().enumerate() {
        let pmf = chain.beta_pmf(i, support.len());
        files.push(write_posterior(&out, &g.id, support, &pmf)?);
        let summary = group_summary(g, &pmf, support)?;
        let scores = data.scores(i);
        shrinkage.push(ShrinkageRow {
            group: g.id.clone(),
            n: g.size(),
            sample_q: (!scores.is_empty()).then(|| lower_sample_quantile(&scores, tau)),
            posterior_mean: summary.mean,
        });
        summaries.push(summary);
    }
    files.push(write_mixing_pmf(&out, support, &chain.mean_pi())?);
    files.push(write_shrinkage(&out, &shrinkage)?);
    files.push(write_summary(&out, &summaries)?);
    Ok(RunOutput {
        files,
        ingest: Some(data.report),
    })
}

/// Seed of the fit at position `index` of the level grid.
pub fn level_seed(master: u64, index: usize) -> u64 {
    stream_rng(master, index as u64).random()
}

/// One independent hierarchical fit per level in the grid, censoring
/// handled when present, written as per-group quantile functions.
pub fn run_quantile_function(cfg: &RunConfig) -> Result<RunOutput> {
    let levels = cfg.tau_grid()?;
    if levels.is_empty() {
        return Err(invalid("empty level grid"));
    }
    let data = load_required(cfg)?;
    let support = &data.support;
    let mut curves: Vec<Vec<QuantilePoint>> = vec![Vec::new(); data.groups.len()];
    for (t, &tau) in levels.iter().enumerate() {
        let chain = fit(&data, cfg, tau, level_seed(cfg.seed(), t), true)?;
        for (i, curve) in curves.iter_mut().enumerate() {
            let s = posterior_summary(&chain.beta_pmf(i, support.len()), support, &[0.05, 0.95])?;
            curve.push(QuantilePoint {
                tau: tau.get(),
                mean: s.mean,
                q05: s.quantiles[0].1,
                q95: s.quantiles[1].1,
            });
        }
    }
    let out = cfg.out_dir();
    let files = data
        .groups
        .iter()
        .zip(&curves)
        .map(|(g, c)| write_quantile_function(&out, &g.id, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunOutput {
        files,
        ingest: Some(data.report),
    })
}

/// Monte Carlo comparison of the quantile estimators.
pub fn run_mc(cfg: &RunConfig) -> Result<RunOutput> {
    let rows = run_monte_carlo(&cfg.mc_config()?)?;
    Ok(RunOutput {
        files: vec![write_mc_table(&cfg.out_dir(), &rows)?],
        ingest: None,
    })
}
