//! Hierarchical quantile model: each subpopulation's quantile `β_i` is drawn
//! from a shared mixing pmf `π` with a Dirichlet(λ) hyperprior, and each
//! subpopulation's pmf `θ_i` is Dirichlet(α) within the region of its `β_i`.
//!
//! [`gibbs_hierarchical`] alternates `β_i | D_i, π` (exact, by enumeration)
//! with `π | β ~ Dirichlet(λ + ν)`. [`gibbs_censored`] adds, for
//! subpopulations with right-censored observations, a draw of `θ_i` from the
//! region-truncated Dirichlet given the observed counts followed by fresh
//! imputations of the censored values. [`bootstrap_censored`] and
//! [`naive_gibbs_diagnostic`] are single-population companions.
//!
//! Every subpopulation owns a random stream derived from the master seed and
//! a hash of its id, so reordering the input permutes the output without
//! changing any draw.

use std::collections::HashSet;

use rand::Rng;

use crate::diagnostics::lag1_autocorrelation;
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::posterior::{posterior_from_log_parts, sample_index};
use crate::quantile::{region_of, QuantileLevel, RegionIndex, SimplexPoint, Support};
use crate::random::{categorical, dirichlet, label_stream, stream_rng, StreamRng};
use crate::regions::{log_region_probs, CountVector, DirichletParams};
use crate::truncated::{sample_constrained_dirichlet, TruncatedDirichletSpec};

/// Stream reserved for the mixing-pmf updates.
const MIXING_STREAM: u64 = u64::MAX;

/// Data for one subpopulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubpopData {
    pub id: String,
    /// Fully observed counts per support point.
    pub counts: CountVector,
    /// Zero-based support index `l` of each right-censored observation, known
    /// only to satisfy `U ≥ s_l`.
    pub censor_lows: Vec<usize>,
}

impl SubpopData {
    pub fn new(id: impl Into<String>, counts: CountVector, censor_lows: Vec<usize>) -> Self {
        Self {
            id: id.into(),
            counts,
            censor_lows,
        }
    }

    /// Number of observations, censored ones included.
    pub fn size(&self) -> u64 {
        self.counts.total() + self.censor_lows.len() as u64
    }
}

/// Shared likelihood concentration `α` and Dirichlet hyperprior `λ` on `π`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub alpha: DirichletParams,
    pub lambda: Vec<f64>,
}

impl HyperParams {
    pub fn new(alpha: DirichletParams, lambda: Vec<f64>) -> Result<Self> {
        if lambda.len() != alpha.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                got: lambda.len(),
            });
        }
        if let Some(l) = lambda.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(invalid(format!("hyperprior weight {l} is not positive")));
        }
        Ok(Self { alpha, lambda })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

/// Burn-in, number of kept draws and thinning interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub burn_in: usize,
    pub kept: usize,
    pub thin: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            kept: 5000,
            thin: 1,
        }
    }
}

impl Schedule {
    pub fn new(burn_in: usize, kept: usize, thin: usize) -> Result<Self> {
        if kept == 0 {
            return Err(invalid("schedule keeps no draws"));
        }
        if thin == 0 {
            return Err(invalid("thinning interval must be at least 1"));
        }
        Ok(Self {
            burn_in,
            kept,
            thin,
        })
    }

    pub fn total_sweeps(&self) -> usize {
        self.burn_in + self.kept * self.thin
    }

    fn keeps(&self, sweep: usize) -> bool {
        sweep >= self.burn_in && (sweep - self.burn_in + 1).is_multiple_of(self.thin)
    }
}

/// One retained Gibbs state.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyDraw {
    /// One-based sweep number.
    pub iteration: usize,
    /// Zero-based support index of each `β_i`.
    pub beta_index: Vec<usize>,
    pub pi: Vec<f64>,
    /// Zero-based support indices of each subpopulation's imputed censored
    /// values, in the order of its `censor_lows`.
    pub imputed: Vec<Vec<usize>>,
}

impl HierarchyDraw {
    pub fn betas(&self, support: &Support) -> Vec<f64> {
        self.beta_index.iter().map(|&k| support.value(k)).collect()
    }
}

/// Retained draws with the subpopulation ids they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub ids: Vec<String>,
    pub draws: Vec<HierarchyDraw>,
}

impl Chain {
    /// Relative frequency of each support point in the `β_i` chain.
    pub fn beta_pmf(&self, subpop: usize, support_len: usize) -> Vec<f64> {
        let mut pmf = vec![0.0; support_len];
        for d in &self.draws {
            pmf[d.beta_index[subpop]] += 1.0;
        }
        let n = self.draws.len() as f64;
        pmf.iter_mut().for_each(|p| *p /= n);
        pmf
    }

    /// Monte Carlo estimate of `E(π | D)`.
    pub fn mean_pi(&self) -> Vec<f64> {
        let j = self.draws.first().map_or(0, |d| d.pi.len());
        let mut m = vec![0.0; j];
        for d in &self.draws {
            m.iter_mut().zip(&d.pi).for_each(|(a, p)| *a += p);
        }
        let n = self.draws.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// `β_i` values across the retained draws.
    pub fn beta_trace(&self, subpop: usize, support: &Support) -> Vec<f64> {
        self.draws
            .iter()
            .map(|d| support.value(d.beta_index[subpop]))
            .collect()
    }
}

/// Upper-tail masses below this are treated as lost to underflow.
const TAIL_UNDERFLOW: f64 = 1e-290;

/// Independent categorical draws from `θ` renormalized to the upper tail
/// `{l, …, J−1}` for each censoring index `l`.
///
/// `theta_alpha` holds the Dirichlet parameters `θ` was drawn with. When a
/// tail mass has underflowed, the split of that tail is redrawn from the
/// Dirichlet of its parameters. This is its exact conditional law whenever
/// the tail lies above the constrained components, which is the only way a
/// tail can underflow, since any tail holding the quantile index carries at
/// least `1 − τ`.
pub fn impute_censored<R: Rng + ?Sized>(
    theta: &SimplexPoint,
    theta_alpha: &[f64],
    censor_lows: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let p = theta.probs();
    let j = p.len();
    if theta_alpha.len() != j {
        return Err(Error::DimensionMismatch {
            expected: j,
            got: theta_alpha.len(),
        });
    }
    if let Some(l) = censor_lows.iter().find(|&&l| l >= j) {
        return Err(invalid(format!("censoring index {l} outside support")));
    }
    // Lowest censoring index first, so a redrawn tail never feeds an
    // observation whose tail starts further down.
    let mut order: Vec<usize> = (0..censor_lows.len()).collect();
    order.sort_by_key(|&i| censor_lows[i]);
    let mut q = p.to_vec();
    let mut out = vec![0; censor_lows.len()];
    for i in order {
        let l = censor_lows[i];
        if q[l..].iter().sum::<f64>() < TAIL_UNDERFLOW {
            q[l..].copy_from_slice(dirichlet(&theta_alpha[l..], rng).probs());
        }
        out[i] = l + categorical(&q[l..], rng);
    }
    Ok(out)
}

/// Per-subpopulation sampler state.
struct SubpopState {
    rng: StreamRng,
    beta: usize,
    imputed: Vec<usize>,
    /// `ln c(α + n)` for the observed counts; reused whenever nothing is
    /// imputed.
    log_c_observed: Vec<f64>,
    failure: Option<Error>,
}

fn validate(data: &[SubpopData], hp: &HyperParams) -> Result<()> {
    if data.is_empty() {
        return Err(invalid("no subpopulations"));
    }
    let j = hp.len();
    let mut seen = HashSet::new();
    for d in data {
        if !seen.insert(d.id.as_str()) {
            return Err(invalid(format!("duplicate subpopulation id {:?}", d.id)));
        }
        if d.counts.len() != j {
            return Err(Error::Subpopulation {
                id: d.id.clone(),
                source: Box::new(Error::DimensionMismatch {
                    expected: j,
                    got: d.counts.len(),
                }),
            });
        }
        if let Some(l) = d.censor_lows.iter().find(|&&l| l >= j) {
            return Err(Error::Subpopulation {
                id: d.id.clone(),
                source: Box::new(invalid(format!("censoring index {l} outside support"))),
            });
        }
    }
    Ok(())
}

/// Lower empirical `τ`-quantile index of the observed counts, or the middle
/// index when there are none.
fn initial_beta(counts: &CountVector, tau: QuantileLevel) -> usize {
    let n = counts.total();
    if n == 0 {
        return (counts.len() - 1) / 2;
    }
    let rank = ((tau.get() * n as f64).ceil() as u64).max(1);
    let mut cum = 0;
    for (k, &c) in counts.counts().iter().enumerate() {
        cum += c;
        if cum >= rank {
            return k;
        }
    }
    counts.len() - 1
}

fn with_id<T>(id: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Subpopulation {
        id: id.to_string(),
        source: Box::new(e),
    })
}

/// Gibbs sampler for `(β, π)` given fully observed subpopulations.
pub fn gibbs_hierarchical(
    data: &[SubpopData],
    hp: &HyperParams,
    tau: QuantileLevel,
    schedule: &Schedule,
    seed: u64,
    exec: Execution,
) -> Result<Chain> {
    if let Some(d) = data.iter().find(|d| !d.censor_lows.is_empty()) {
        return Err(invalid(format!(
            "subpopulation {:?} has censored observations; use the censored sampler",
            d.id
        )));
    }
    run_gibbs(data, hp, tau, schedule, seed, exec)
}

/// Gibbs sampler for `(β, π, U)` with right-censored observations.
///
/// For a subpopulation with censoring, each sweep draws `θ_i` from the
/// Dirichlet(α + n_i) restricted to the region of the current `β_i`, where
/// `n_i` holds the fully observed counts only, then imputes every censored
/// value from `θ_i` on its legal tail, then draws `β_i` given observed plus
/// imputed counts. Subpopulations without censoring take the uncensored
/// update, so with no censoring anywhere the chain equals
/// [`gibbs_hierarchical`] draw for draw.
pub fn gibbs_censored(
    data: &[SubpopData],
    hp: &HyperParams,
    tau: QuantileLevel,
    schedule: &Schedule,
    seed: u64,
    exec: Execution,
) -> Result<Chain> {
    run_gibbs(data, hp, tau, schedule, seed, exec)
}

fn run_gibbs(
    data: &[SubpopData],
    hp: &HyperParams,
    tau: QuantileLevel,
    schedule: &Schedule,
    seed: u64,
    exec: Execution,
) -> Result<Chain> {
    validate(data, hp)?;
    let j = hp.len();
    let log_c_prior = log_region_probs(&hp.alpha, tau)?.log_probs().to_vec();
    let mut states = exec.try_map_indexed(data.len(), |i| {
        let d = &data[i];
        let log_c_observed = if d.counts.total() == 0 {
            log_c_prior.clone()
        } else {
            let post = with_id(&d.id, hp.alpha.add_counts(&d.counts))?;
            with_id(&d.id, log_region_probs(&post, tau))?
                .log_probs()
                .to_vec()
        };
        Ok::<_, Error>(SubpopState {
            rng: stream_rng(seed, label_stream(&d.id)),
            beta: initial_beta(&d.counts, tau),
            imputed: d.censor_lows.clone(),
            log_c_observed,
            failure: None,
        })
    })?;
    let mut pi_rng = stream_rng(seed, MIXING_STREAM);
    let lambda_total: f64 = hp.lambda.iter().sum();
    let mut pi: Vec<f64> = hp.lambda.iter().map(|l| l / lambda_total).collect();
    let mut draws = Vec::with_capacity(schedule.kept);

    for sweep in 0..schedule.total_sweeps() {
        let log_pi: Vec<f64> = pi.iter().map(|p| p.ln()).collect();
        exec.for_each_mut(&mut states, |i, state| {
            if let Err(e) = update_subpop(state, &data[i], hp, tau, &pi, &log_pi, &log_c_prior) {
                state.failure = Some(e);
            }
        });
        if let Some((i, s)) = states
            .iter_mut()
            .enumerate()
            .find(|(_, s)| s.failure.is_some())
        {
            return with_id(&data[i].id, Err(s.failure.take().expect("checked")));
        }
        let mut nu = hp.lambda.clone();
        for s in &states {
            nu[s.beta] += 1.0;
        }
        pi = dirichlet(&nu, &mut pi_rng).into_vec();
        if schedule.keeps(sweep) {
            draws.push(HierarchyDraw {
                iteration: sweep + 1,
                beta_index: states.iter().map(|s| s.beta).collect(),
                pi: pi.clone(),
                imputed: states.iter().map(|s| s.imputed.clone()).collect(),
            });
        }
    }
    debug_assert!(draws.iter().all(|d| d.pi.len() == j));
    Ok(Chain {
        ids: data.iter().map(|d| d.id.clone()).collect(),
        draws,
    })
}

fn update_subpop(
    state: &mut SubpopState,
    data: &SubpopData,
    hp: &HyperParams,
    tau: QuantileLevel,
    pi: &[f64],
    log_pi: &[f64],
    log_c_prior: &[f64],
) -> Result<()> {
    let pmf = if data.censor_lows.is_empty() {
        if data.counts.total() == 0 {
            state.beta = sample_index(pi, &mut state.rng);
            return Ok(());
        }
        posterior_from_log_parts(log_pi, log_c_prior, &state.log_c_observed).pmf
    } else {
        let observed = hp.alpha.add_counts(&data.counts)?;
        let region = RegionIndex::new(state.beta + 1, hp.len())?;
        let spec = TruncatedDirichletSpec::new(observed, region, tau)?;
        let theta = sample_constrained_dirichlet(&spec, &mut state.rng)?;
        state.imputed = impute_censored(
            &theta,
            spec.alpha.alpha(),
            &data.censor_lows,
            &mut state.rng,
        )?;
        let mut all = data.counts.clone();
        for &u in &state.imputed {
            all.add(u, 1);
        }
        let log_c_post = log_region_probs(&hp.alpha.add_counts(&all)?, tau)?;
        posterior_from_log_parts(log_pi, log_c_prior, log_c_post.log_probs()).pmf
    };
    state.beta = sample_index(&pmf, &mut state.rng);
    Ok(())
}

/// Draws of the quantile from the censored Bayesian bootstrap: per draw,
/// `θ* ~ Dirichlet(α + n)`, impute the censored values from `θ*`, then
/// `θ ~ Dirichlet(α + n + n')` and report the quantile index of `θ`.
///
/// Draw `d` uses stream `d` of `seed`.
pub fn bootstrap_censored(
    data: &SubpopData,
    alpha: &DirichletParams,
    tau: QuantileLevel,
    draws: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<usize>> {
    if draws == 0 {
        return Err(invalid("bootstrap needs at least one draw"));
    }
    validate(
        std::slice::from_ref(data),
        &HyperParams::new(alpha.clone(), vec![1.0; alpha.len()])?,
    )?;
    let observed = alpha.add_counts(&data.counts)?;
    exec.try_map_indexed(draws, |d| {
        let mut rng = stream_rng(seed, d as u64);
        loop {
            let theta_star = dirichlet(observed.alpha(), &mut rng);
            let imputed =
                impute_censored(&theta_star, observed.alpha(), &data.censor_lows, &mut rng)?;
            let mut full = observed.alpha().to_vec();
            for u in imputed {
                full[u] += 1.0;
            }
            let theta = dirichlet(&full, &mut rng);
            match region_of(theta.probs(), tau) {
                Ok(k) => return Ok(k.zero_based()),
                Err(Error::NonUniqueQuantile { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
    })
}

/// Output of the naive data-augmentation sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveReport {
    /// Quantile value at each retained sweep.
    pub betas: Vec<f64>,
    /// `imputed[c][t]`: value of censored observation `c` at sweep `t`.
    pub imputed: Vec<Vec<f64>>,
    pub beta_autocorr: f64,
    /// Lag-1 autocorrelation of each imputed value's trace.
    pub imputed_autocorr: Vec<f64>,
}

impl NaiveReport {
    /// Largest lag-1 autocorrelation among the imputed values.
    pub fn worst_imputed_autocorr(&self) -> f64 {
        self.imputed_autocorr
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Two-block sampler alternating `θ | D, U ~ Dirichlet(α + n + n')` with
/// `U | θ`. It mixes very slowly when a censored value's legal range holds no
/// observed data; it exists to exhibit that behaviour, not for inference.
pub fn naive_gibbs_diagnostic(
    data: &SubpopData,
    support: &Support,
    alpha: &DirichletParams,
    tau: QuantileLevel,
    schedule: &Schedule,
    seed: u64,
) -> Result<NaiveReport> {
    validate(
        std::slice::from_ref(data),
        &HyperParams::new(alpha.clone(), vec![1.0; alpha.len()])?,
    )?;
    if support.len() != alpha.len() {
        return Err(Error::DimensionMismatch {
            expected: support.len(),
            got: alpha.len(),
        });
    }
    let mut rng = stream_rng(seed, label_stream(&data.id));
    let observed = alpha.add_counts(&data.counts)?;
    let mut imputed_now = data.censor_lows.clone();
    let mut betas = Vec::with_capacity(schedule.kept);
    let mut imputed = vec![Vec::with_capacity(schedule.kept); data.censor_lows.len()];
    for sweep in 0..schedule.total_sweeps() {
        let mut full = observed.alpha().to_vec();
        for &u in &imputed_now {
            full[u] += 1.0;
        }
        let (theta, k) = loop {
            let theta = dirichlet(&full, &mut rng);
            match region_of(theta.probs(), tau) {
                Ok(k) => break (theta, k),
                Err(Error::NonUniqueQuantile { .. }) => continue,
                Err(e) => return Err(e),
            }
        };
        imputed_now = impute_censored(&theta, &full, &data.censor_lows, &mut rng)?;
        if schedule.keeps(sweep) {
            betas.push(support.value(k.zero_based()));
            for (trace, &u) in imputed.iter_mut().zip(&imputed_now) {
                trace.push(support.value(u));
            }
        }
    }
    Ok(NaiveReport {
        beta_autocorr: lag1_autocorrelation(&betas),
        imputed_autocorr: imputed.iter().map(|t| lag1_autocorrelation(t)).collect(),
        betas,
        imputed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::{posterior_beta, QuantileSpec};

    fn tau(t: f64) -> QuantileLevel {
        QuantileLevel::new(t).unwrap()
    }

    fn counts(c: &[u64]) -> CountVector {
        CountVector::new(c.to_vec())
    }

    #[test]
    fn imputation_examples() {
        let theta = SimplexPoint::new(vec![0.5, 0.3, 0.2]).unwrap();
        let a = [1.0; 3];
        let mut rng = stream_rng(1, 0);
        let n = 100_000;
        let draws = impute_censored(&theta, &a, &vec![1; n], &mut rng).unwrap();
        let at2 = draws.iter().filter(|&&u| u == 1).count() as f64 / n as f64;
        assert!(draws.iter().all(|&u| u >= 1));
        assert!((at2 - 0.6).abs() < 4.0 * (0.24 / n as f64).sqrt());
        assert_eq!(
            impute_censored(&theta, &a, &[2, 2], &mut rng).unwrap(),
            vec![2, 2]
        );
        let full = impute_censored(&theta, &a, &vec![0; 1000], &mut rng).unwrap();
        assert!(full.contains(&0));
        assert!(impute_censored(&theta, &a, &[3], &mut rng).is_err());
        assert!(impute_censored(&theta, &a[..2], &[1], &mut rng).is_err());
    }

    #[test]
    fn underflowed_tail_is_redrawn_from_its_dirichlet() {
        // A tail with no mass splits as Dirichlet(1, 3): the mean weight of
        // the last point is 3/4.
        let dead = SimplexPoint::new(vec![1.0, 0.0, 0.0]).unwrap();
        let mut rng = stream_rng(2, 0);
        let n = 40_000;
        let last = (0..n)
            .filter(|_| impute_censored(&dead, &[1.0, 1.0, 3.0], &[1], &mut rng).unwrap()[0] == 2)
            .count() as f64
            / n as f64;
        assert!(
            (last - 0.75).abs() < 4.0 * (0.1875 / n as f64).sqrt(),
            "{last}"
        );
        let both = impute_censored(&dead, &[1.0, 1.0, 3.0], &[0, 1, 2], &mut rng).unwrap();
        assert_eq!(both[0], 0);
        assert_eq!(both[2], 2);
    }

    #[test]
    fn schedule_validation_and_thinning() {
        assert!(Schedule::new(10, 0, 1).is_err());
        assert!(Schedule::new(10, 5, 0).is_err());
        let s = Schedule::new(3, 4, 2).unwrap();
        assert_eq!(s.total_sweeps(), 11);
        let kept: Vec<usize> = (0..11).filter(|&t| s.keeps(t)).collect();
        assert_eq!(kept, vec![4, 6, 8, 10]);
    }

    fn small_problem() -> (Vec<SubpopData>, HyperParams) {
        let data = vec![
            SubpopData::new("a", counts(&[3, 1, 0, 2]), vec![]),
            SubpopData::new("b", counts(&[0, 0, 0, 0]), vec![]),
            SubpopData::new("c", counts(&[0, 4, 4, 1]), vec![]),
        ];
        let hp = HyperParams::new(DirichletParams::uniform(4, 0.5).unwrap(), vec![1.0; 4]).unwrap();
        (data, hp)
    }

    #[test]
    fn chains_do_not_depend_on_execution_or_order() {
        let (data, hp) = small_problem();
        let sched = Schedule::new(50, 200, 1).unwrap();
        let a = gibbs_hierarchical(&data, &hp, tau(0.5), &sched, 7, Execution::Sequential).unwrap();
        let b = gibbs_hierarchical(&data, &hp, tau(0.5), &sched, 7, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let rev: Vec<SubpopData> = data.iter().rev().cloned().collect();
        let r = gibbs_hierarchical(&rev, &hp, tau(0.5), &sched, 7, Execution::Sequential).unwrap();
        for (da, dr) in a.draws.iter().zip(&r.draws) {
            let mut back = dr.beta_index.clone();
            back.reverse();
            assert_eq!(da.beta_index, back);
            assert_eq!(da.pi, dr.pi);
        }
    }

    #[test]
    fn censored_sampler_without_censoring_matches_plain_sampler() {
        let (data, hp) = small_problem();
        let sched = Schedule::new(20, 100, 2).unwrap();
        let a = gibbs_hierarchical(&data, &hp, tau(0.3), &sched, 3, Execution::Parallel).unwrap();
        let b = gibbs_censored(&data, &hp, tau(0.3), &sched, 3, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pinned_hyperprior_reproduces_single_population_posterior() {
        let pi_star = [0.1, 0.2, 0.3, 0.4];
        let alpha = DirichletParams::uniform(4, 0.5).unwrap();
        let hp =
            HyperParams::new(alpha.clone(), pi_star.iter().map(|p| p * 1e9).collect()).unwrap();
        let data = vec![SubpopData::new("x", counts(&[2, 1, 0, 3]), vec![])];
        let t = tau(0.5);
        let chain = gibbs_hierarchical(
            &data,
            &hp,
            t,
            &Schedule::new(0, 40_000, 1).unwrap(),
            5,
            Execution::Sequential,
        )
        .unwrap();
        let spec = QuantileSpec::new(t, pi_star.to_vec()).unwrap();
        let exact = posterior_beta(&spec, &alpha, &data[0].counts).unwrap();
        let freq = chain.beta_pmf(0, 4);
        for (f, p) in freq.iter().zip(&exact.pmf) {
            assert!(
                (f - p).abs() < 4.0 * (p * (1.0 - p) / 40_000.0).sqrt() + 1e-9,
                "{f} vs {p}"
            );
        }
    }

    #[test]
    fn forced_imputation_at_top_atom() {
        let alpha = DirichletParams::uniform(3, 1.0).unwrap();
        let hp = HyperParams::new(alpha.clone(), vec![1.0; 3]).unwrap();
        let data = vec![SubpopData::new("top", counts(&[1, 1, 0]), vec![2, 2, 2])];
        let chain = gibbs_censored(
            &data,
            &hp,
            tau(0.5),
            &Schedule::new(10, 200, 1).unwrap(),
            1,
            Execution::Sequential,
        )
        .unwrap();
        assert!(chain.draws.iter().all(|d| d.imputed[0] == vec![2, 2, 2]));

        let boot =
            bootstrap_censored(&data[0], &alpha, tau(0.5), 20_000, 2, Execution::Parallel).unwrap();
        let target =
            log_region_probs(&alpha.add_counts(&counts(&[1, 1, 3])).unwrap(), tau(0.5)).unwrap();
        for k in 0..3 {
            let f = boot.iter().filter(|&&b| b == k).count() as f64 / 20_000.0;
            let p = target.log_probs()[k].exp();
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / 20_000.0).sqrt());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let (mut data, hp) = small_problem();
        let sched = Schedule::new(1, 1, 1).unwrap();
        data[0].censor_lows.push(1);
        assert!(
            gibbs_hierarchical(&data, &hp, tau(0.5), &sched, 1, Execution::Sequential).is_err()
        );
        data[0].censor_lows = vec![9];
        assert!(gibbs_censored(&data, &hp, tau(0.5), &sched, 1, Execution::Sequential).is_err());
        data[0].censor_lows.clear();
        data[1].id = "a".into();
        assert!(gibbs_censored(&data, &hp, tau(0.5), &sched, 1, Execution::Sequential).is_err());
        assert!(gibbs_censored(&[], &hp, tau(0.5), &sched, 1, Execution::Sequential).is_err());
    }

    #[test]
    fn naive_sampler_without_censoring_is_uncorrelated() {
        let support = Support::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let alpha = DirichletParams::uniform(4, 1.0).unwrap();
        let data = SubpopData::new("n", counts(&[2, 3, 3, 2]), vec![]);
        let rep = naive_gibbs_diagnostic(
            &data,
            &support,
            &alpha,
            tau(0.5),
            &Schedule::new(0, 20_000, 1).unwrap(),
            4,
        )
        .unwrap();
        assert!(rep.beta_autocorr.abs() < 4.0 / (20_000f64).sqrt());
        assert!(rep.imputed_autocorr.is_empty());
    }
}
