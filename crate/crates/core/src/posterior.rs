//! Single-population posterior for the quantile.
//!
//! Under a prior pmf `b` on the quantile and a Dirichlet(α) law for `θ`
//! within each region, the posterior is
//! `P(β = s_k | D) ∝ b_k · c_k(α + n) / c_k(α)`, evaluated here in log space.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::quantile::{region_of, QuantileLevel, RegionIndex, SimplexPoint, Support};
use crate::random::{categorical, dirichlet, open01};
use crate::regions::{log_region_probs, CountVector, DirichletParams};
use crate::special::log_sum_exp;

const STARVATION_MIN_PROPOSALS: u64 = 100_000;
const STARVATION_RATE: f64 = 1e-4;

/// Quantile level together with a strictly positive prior pmf on the support.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSpec {
    tau: QuantileLevel,
    prior: Vec<f64>,
    log_prior: Vec<f64>,
}

impl QuantileSpec {
    /// Normalizes `prior` (positive weights) into a pmf.
    pub fn new(tau: QuantileLevel, prior: Vec<f64>) -> Result<Self> {
        if prior.is_empty() {
            return Err(invalid("empty quantile prior"));
        }
        if let Some(b) = prior.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(invalid(format!(
                "quantile prior weight {b} is not positive"
            )));
        }
        let total: f64 = prior.iter().sum();
        let prior: Vec<f64> = prior.into_iter().map(|b| b / total).collect();
        let log_prior = prior.iter().map(|b| b.ln()).collect();
        Ok(Self {
            tau,
            prior,
            log_prior,
        })
    }

    /// Builds the prior from log weights, which may be far outside the range
    /// of `exp`.
    pub fn from_log_weights(tau: QuantileLevel, log_weights: &[f64]) -> Result<Self> {
        if log_weights.iter().any(|l| !l.is_finite()) {
            return Err(invalid("quantile prior log weights must be finite"));
        }
        let norm = log_sum_exp(log_weights);
        let log_prior: Vec<f64> = log_weights.iter().map(|l| l - norm).collect();
        let prior = log_prior.iter().map(|l| l.exp()).collect();
        Ok(Self {
            tau,
            prior,
            log_prior,
        })
    }

    pub fn uniform(tau: QuantileLevel, len: usize) -> Result<Self> {
        Self::new(tau, vec![1.0; len])
    }

    pub fn tau(&self) -> QuantileLevel {
        self.tau
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn log_prior(&self) -> &[f64] {
        &self.log_prior
    }

    pub fn len(&self) -> usize {
        self.prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior.is_empty()
    }
}

/// Posterior pmf of the quantile over the support.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorBeta {
    pub pmf: Vec<f64>,
    /// `ln C(α, n)`, the log normalizing constant `ln Σ_k b_k c_k(α+n)/c_k(α)`.
    pub log_norm_const: f64,
}

/// Posterior mean and left-closed posterior quantiles.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub mean: f64,
    /// `(level, min{s_k : CDF(s_k) ≥ level})` pairs.
    pub quantiles: Vec<(f64, f64)>,
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Exact posterior of the quantile given counts `n`.
pub fn posterior_beta(
    spec: &QuantileSpec,
    alpha: &DirichletParams,
    counts: &CountVector,
) -> Result<PosteriorBeta> {
    check_len(spec.len(), alpha.len())?;
    check_len(spec.len(), counts.len())?;
    if counts.total() == 0 {
        return Ok(PosteriorBeta {
            pmf: spec.prior().to_vec(),
            log_norm_const: 0.0,
        });
    }
    let prior_c = log_region_probs(alpha, spec.tau())?;
    let post_c = log_region_probs(&alpha.add_counts(counts)?, spec.tau())?;
    Ok(posterior_from_log_parts(
        spec.log_prior(),
        prior_c.log_probs(),
        post_c.log_probs(),
    ))
}

/// Combines `ln b_k + ln c_k(α+n) − ln c_k(α)` and normalizes. Callers that
/// reuse `ln c(α)` across many count vectors go through here directly.
pub fn posterior_from_log_parts(
    log_prior: &[f64],
    log_c_prior: &[f64],
    log_c_post: &[f64],
) -> PosteriorBeta {
    let log_w: Vec<f64> = log_prior
        .iter()
        .zip(log_c_prior)
        .zip(log_c_post)
        .map(|((b, cp), cq)| b + cq - cp)
        .collect();
    let log_norm_const = log_sum_exp(&log_w);
    PosteriorBeta {
        pmf: log_w.iter().map(|l| (l - log_norm_const).exp()).collect(),
        log_norm_const,
    }
}

/// Posterior mean `Σ pmf_k s_k` and, for each level `q`, the smallest support
/// value whose posterior CDF reaches `q`.
pub fn posterior_summary(
    pmf: &[f64],
    support: &Support,
    levels: &[f64],
) -> Result<PosteriorSummary> {
    check_len(support.len(), pmf.len())?;
    if let Some(q) = levels.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(invalid(format!("summary level {q} outside [0, 1]")));
    }
    let mean = pmf.iter().zip(support.values()).map(|(p, s)| p * s).sum();
    let quantiles = levels
        .iter()
        .map(|&q| (q, support.value(lower_quantile_index(pmf, q))))
        .collect();
    Ok(PosteriorSummary { mean, quantiles })
}

/// Smallest index with CDF ≥ `q`, allowing for rounding in the running sum.
pub(crate) fn lower_quantile_index(pmf: &[f64], q: f64) -> usize {
    let mut cum = 0.0;
    for (k, &p) in pmf.iter().enumerate() {
        cum += p;
        if cum >= q - 1e-12 {
            return k;
        }
    }
    pmf.len() - 1
}

/// Acceptance bookkeeping for the rejection sampler.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AcceptStats {
    pub proposals: u64,
    pub accepted: u64,
    /// Proposals discarded because their quantile was not unique.
    pub ties: u64,
    /// `1/M`, the expected acceptance rate.
    pub expected_rate: f64,
}

impl AcceptStats {
    pub fn rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// One exact draw of `θ` from its posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaDraw {
    pub theta: SimplexPoint,
    pub beta: f64,
    pub region: RegionIndex,
}

/// Rejection sampler for `θ | D`: propose from Dirichlet(α + n) and accept
/// with probability `m'_k / max_j m'_j`, `m'_k = b_k / c_k(α)`.
#[derive(Debug, Clone)]
pub struct ThetaPosteriorSampler {
    tau: QuantileLevel,
    support: Support,
    proposal: DirichletParams,
    log_accept: Vec<f64>,
    stats: AcceptStats,
}

impl ThetaPosteriorSampler {
    pub fn new(
        spec: &QuantileSpec,
        support: &Support,
        alpha: &DirichletParams,
        counts: &CountVector,
    ) -> Result<Self> {
        check_len(support.len(), spec.len())?;
        check_len(support.len(), alpha.len())?;
        check_len(support.len(), counts.len())?;
        let prior_c = log_region_probs(alpha, spec.tau())?;
        let log_m: Vec<f64> = spec
            .log_prior()
            .iter()
            .zip(prior_c.log_probs())
            .map(|(b, c)| b - c)
            .collect();
        let max = log_m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_accept: Vec<f64> = log_m.iter().map(|l| l - max).collect();
        // E[m'_k / M'] under the proposal is Σ_k c_k(α+n) m'_k / M'.
        let post_c = log_region_probs(&alpha.add_counts(counts)?, spec.tau())?;
        let expected_rate = post_c
            .log_probs()
            .iter()
            .zip(&log_accept)
            .map(|(c, a)| (c + a).exp())
            .sum();
        Ok(Self {
            tau: spec.tau(),
            support: support.clone(),
            proposal: alpha.add_counts(counts)?,
            log_accept,
            stats: AcceptStats {
                expected_rate,
                ..AcceptStats::default()
            },
        })
    }

    pub fn stats(&self) -> AcceptStats {
        self.stats
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<ThetaDraw> {
        let mut attempts = 0u64;
        loop {
            attempts += 1;
            self.stats.proposals += 1;
            let theta = dirichlet(self.proposal.alpha(), rng);
            let region = match region_of(theta.probs(), self.tau) {
                Ok(k) => k,
                Err(Error::NonUniqueQuantile { .. }) => {
                    self.stats.ties += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let log_p = self.log_accept[region.zero_based()];
            if log_p >= 0.0 || open01(rng).ln() < log_p {
                self.stats.accepted += 1;
                return Ok(ThetaDraw {
                    beta: self.support.value(region.zero_based()),
                    theta,
                    region,
                });
            }
            if attempts >= STARVATION_MIN_PROPOSALS && self.stats.rate() < STARVATION_RATE {
                return Err(Error::SamplerStarved {
                    sampler: "posterior theta rejection sampler",
                    attempts,
                    hint: format!(
                        "acceptance rate {:.2e}; use a flatter quantile prior",
                        self.stats.rate()
                    ),
                });
            }
        }
    }
}

/// Single exact draw of `θ | D`; see [`ThetaPosteriorSampler`] for repeated
/// use.
pub fn sample_theta_posterior<R: Rng + ?Sized>(
    spec: &QuantileSpec,
    support: &Support,
    alpha: &DirichletParams,
    counts: &CountVector,
    rng: &mut R,
) -> Result<(ThetaDraw, AcceptStats)> {
    let mut sampler = ThetaPosteriorSampler::new(spec, support, alpha, counts)?;
    let draw = sampler.draw(rng)?;
    Ok((draw, sampler.stats()))
}

/// Kernel-weight approximation to the posterior of the quantile when every
/// observation is distinct and the support is the sample itself.
#[derive(Debug, Clone, PartialEq)]
pub struct CheapPosterior {
    values: Vec<f64>,
    weights: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

impl CheapPosterior {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `F̂(x) = Σ_j w*_j 1(s_j ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .take_while(|(s, _)| **s <= x)
            .map(|(_, w)| w)
            .sum()
    }
}

/// Gaussian weights `w_k = exp(−J((k−1)/(J−1) − τ)² / (2τ(1−τ)))` on the
/// sorted data, multiplied by the prior and normalized.
pub fn cheap_posterior(sorted_data: &[f64], spec: &QuantileSpec) -> Result<CheapPosterior> {
    let j = sorted_data.len();
    if j < 2 {
        return Err(invalid(
            "kernel approximation needs at least 2 observations",
        ));
    }
    check_len(j, spec.len())?;
    if let Some(w) = sorted_data.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(invalid(format!(
            "kernel approximation needs strictly increasing data without ties ({} then {})",
            w[0], w[1]
        )));
    }
    let t = spec.tau().get();
    let scale = 2.0 * t * (1.0 - t);
    let log_w: Vec<f64> = (0..j)
        .zip(spec.log_prior())
        .map(|(k, lb)| {
            let d = k as f64 / (j - 1) as f64 - t;
            -(j as f64) * d * d / scale + lb
        })
        .collect();
    let norm = log_sum_exp(&log_w);
    let weights: Vec<f64> = log_w.iter().map(|l| (l - norm).exp()).collect();
    let mean: f64 = weights.iter().zip(sorted_data).map(|(w, s)| w * s).sum();
    let variance = weights
        .iter()
        .zip(sorted_data)
        .map(|(w, s)| w * (s - mean) * (s - mean))
        .sum();
    Ok(CheapPosterior {
        values: sorted_data.to_vec(),
        weights,
        mean,
        variance,
    })
}

/// Draws a support index from a posterior pmf.
pub fn sample_index<R: Rng + ?Sized>(pmf: &[f64], rng: &mut R) -> usize {
    categorical(pmf, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::stream_rng;
    use crate::regions::region_probs;
    use rand::Rng;

    fn tau(t: f64) -> QuantileLevel {
        QuantileLevel::new(t).unwrap()
    }

    fn s3() -> Support {
        Support::new(vec![-1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn zero_counts_return_prior_exactly() {
        let spec = QuantileSpec::new(tau(0.3), vec![0.2, 0.5, 0.3]).unwrap();
        let alpha = DirichletParams::new(vec![0.4, 1.0, 2.0]).unwrap();
        let post = posterior_beta(&spec, &alpha, &CountVector::zeros(3)).unwrap();
        assert_eq!(post.pmf, spec.prior());
    }

    #[test]
    fn bootstrap_prior_gives_updated_region_probs() {
        let mut rng = stream_rng(8, 0);
        for _ in 0..200 {
            let j = rng.random_range(2..=6);
            let alpha = DirichletParams::new((0..j).map(|_| rng.random_range(0.05..3.0)).collect())
                .unwrap();
            let counts = CountVector::new((0..j).map(|_| rng.random_range(0..12)).collect());
            let t = tau(rng.random_range(0.05..0.95));
            let c = log_region_probs(&alpha, t).unwrap();
            let spec = QuantileSpec::from_log_weights(t, c.log_probs()).unwrap();
            let post = posterior_beta(&spec, &alpha, &counts).unwrap();
            let target = log_region_probs(&alpha.add_counts(&counts).unwrap(), t).unwrap();
            for (p, l) in post.pmf.iter().zip(target.log_probs()) {
                assert!((p.ln() - l).abs() < 1e-12, "{} vs {l}", p.ln());
            }
        }
    }

    #[test]
    fn matches_reweighted_simulation() {
        let t = tau(0.4);
        let spec = QuantileSpec::uniform(t, 3).unwrap();
        let alpha = DirichletParams::uniform(3, 1.0).unwrap();
        let counts = CountVector::new(vec![1, 1, 1]);
        let post = posterior_beta(&spec, &alpha, &counts).unwrap();
        let c = region_probs(&alpha, t).unwrap();
        let mut rng = stream_rng(21, 0);
        let draws = 400_000;
        let mut w = [0.0; 3];
        let mut w2 = [0.0; 3];
        for _ in 0..draws {
            let theta = dirichlet(&[2.0, 2.0, 2.0], &mut rng);
            if let Ok(k) = region_of(theta.probs(), t) {
                let x = spec.prior()[k.zero_based()] / c.probs()[k.zero_based()];
                w[k.zero_based()] += x;
                w2[k.zero_based()] += x * x;
            }
        }
        let total: f64 = w.iter().sum();
        for k in 0..3 {
            let est = w[k] / total;
            // Delta-method standard error of a ratio estimator.
            let var = (w2[k] * (1.0 - est).powi(2) + (w2.iter().sum::<f64>() - w2[k]) * est * est)
                / (total * total);
            assert!(
                (est - post.pmf[k]).abs() < 4.0 * var.sqrt(),
                "{k}: {est} vs {}",
                post.pmf[k]
            );
        }
    }

    #[test]
    fn summary_examples() {
        let s = Support::new(vec![1.0, 2.0, 5.0]).unwrap();
        let sum = posterior_summary(&[0.0, 0.0, 1.0], &s, &[0.05, 0.5, 0.95]).unwrap();
        assert_eq!(sum.mean, 5.0);
        assert!(sum.quantiles.iter().all(|&(_, v)| v == 5.0));

        let two = Support::new(vec![0.0, 1.0]).unwrap();
        let sum = posterior_summary(&[0.5, 0.5], &two, &[0.5]).unwrap();
        assert_eq!(sum.quantiles[0].1, 0.0);

        let sum = posterior_summary(&[0.36, 0.48, 0.16], &s3(), &[]).unwrap();
        assert!((sum.mean + 0.2).abs() < 1e-15);
        assert!(sum.quantiles.is_empty());
    }

    #[test]
    fn rejection_sampler_acceptance() {
        let t = tau(0.4);
        let alpha = DirichletParams::new(vec![0.5, 1.5, 1.0]).unwrap();
        let counts = CountVector::new(vec![2, 0, 3]);
        let c = log_region_probs(&alpha, t).unwrap();
        let boot = QuantileSpec::from_log_weights(t, c.log_probs()).unwrap();
        let mut sampler = ThetaPosteriorSampler::new(&boot, &s3(), &alpha, &counts).unwrap();
        let mut rng = stream_rng(2, 0);
        for _ in 0..5000 {
            let d = sampler.draw(&mut rng).unwrap();
            assert!(d.region.contains(&d.theta, t));
        }
        let st = sampler.stats();
        assert_eq!(st.accepted, st.proposals - st.ties);

        let mut u = stream_rng(3, 0);
        let weak: Vec<f64> = c
            .log_probs()
            .iter()
            .map(|l| l + (1.0 + 0.01 * u.random::<f64>()).ln())
            .collect();
        let weak = QuantileSpec::from_log_weights(t, &weak).unwrap();
        let mut sampler = ThetaPosteriorSampler::new(&weak, &s3(), &alpha, &counts).unwrap();
        for _ in 0..20_000 {
            sampler.draw(&mut rng).unwrap();
        }
        assert!(sampler.stats().rate() >= 0.99, "{}", sampler.stats().rate());
    }

    #[test]
    fn rejection_sampler_starves_on_hostile_prior() {
        let t = tau(0.5);
        let s = Support::new(vec![0.0, 1.0, 2.0]).unwrap();
        let alpha = DirichletParams::uniform(3, 1.0).unwrap();
        let counts = CountVector::new(vec![0, 0, 300]);
        let spec = QuantileSpec::new(t, vec![1.0, 1e-12, 1e-12]).unwrap();
        let mut sampler = ThetaPosteriorSampler::new(&spec, &s, &alpha, &counts).unwrap();
        let err = sampler.draw(&mut stream_rng(1, 0)).unwrap_err();
        assert!(matches!(err, Error::SamplerStarved { .. }));
    }

    #[test]
    fn cheap_posterior_examples() {
        let data: Vec<f64> = (0..11).map(|x| x as f64).collect();
        let spec = QuantileSpec::uniform(tau(0.3), 11).unwrap();
        let cp = cheap_posterior(&data, &spec).unwrap();
        let w = cp.weights();
        let argmax = (0..11)
            .max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap())
            .unwrap();
        assert_eq!(argmax, 3);
        // The kernel peaks at exactly one where k − 1 = (J − 1)τ, so each
        // weight relative to the peak is the bare kernel value.
        let d: f64 = 5.0 / 10.0 - 0.3;
        let expected = (-11.0 * d * d / (2.0 * 0.3 * 0.7)).exp();
        assert!((w[5] / w[3] - expected).abs() < 1e-14);
        assert!((cp.cdf(100.0) - 1.0).abs() < 1e-12);
        assert_eq!(cp.cdf(-1.0), 0.0);
        assert!(cheap_posterior(
            &[1.0, 1.0, 2.0],
            &QuantileSpec::uniform(tau(0.5), 3).unwrap()
        )
        .is_err());
    }
}
