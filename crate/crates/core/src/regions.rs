//! Probabilities `c_k(α) = P(θ ∈ A_k)` that a Dirichlet draw has its
//! quantile at `s_k`.
//!
//! With `B_k = P(θ_1 + … + θ_k < τ) = I_τ(α⁺_k, α⁺_J − α⁺_k)`, `B_0 = 1` and
//! `B_J = 0`, the regions give `c_k = B_{k−1} − B_k`. [`region_probs`]
//! evaluates this in linear space and [`log_region_probs`] entirely in log
//! space through `ln c_k = ln B_k + ln(exp(ln B_{k−1} − ln B_k) − 1)`.

use crate::error::{invalid, Error, Result};
use crate::quantile::QuantileLevel;
use crate::special::{
    beta_reg_tails, binomial_cdf, ln_beta_reg_tails, ln_binomial_pmf, log1m_exp, log_expm1,
    log_sum_exp,
};

/// Floor applied to linear-space region probabilities; the log value is kept
/// exact.
pub const LINEAR_FLOOR: f64 = 1e-300;

/// Largest total concentration accepted before incomplete-beta evaluation
/// loses meaning.
const MAX_TOTAL_CONCENTRATION: f64 = 1e12;

/// Dirichlet concentration vector `α`, one entry per support point.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(invalid(format!(
                "Dirichlet needs at least 2 components, got {}",
                alpha.len()
            )));
        }
        if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(invalid(format!("Dirichlet parameter {a} is not positive")));
        }
        Ok(Self { alpha })
    }

    /// `J` copies of `value`.
    pub fn uniform(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// Cumulative sums `α⁺_k`, `k = 1..J`.
    pub fn cumulative(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .scan(0.0, |acc, &a| {
                *acc += a;
                Some(*acc)
            })
            .collect()
    }

    /// Conjugate update `α + n`.
    pub fn add_counts(&self, counts: &CountVector) -> Result<Self> {
        if counts.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: counts.len(),
            });
        }
        Ok(Self {
            alpha: self
                .alpha
                .iter()
                .zip(counts.counts())
                .map(|(&a, &n)| a + n as f64)
                .collect(),
        })
    }

    /// `α + w`, for real-valued pseudo-counts.
    pub fn add_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: weights.len(),
            });
        }
        Self::new(self.alpha.iter().zip(weights).map(|(a, w)| a + w).collect())
    }
}

/// Observation counts `n_j` per support point.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountVector {
    counts: Vec<u64>,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            counts: vec![0; len],
        }
    }

    /// Tallies zero-based support indices.
    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut counts = vec![0; len];
        for i in indices {
            *counts
                .get_mut(i)
                .ok_or_else(|| invalid(format!("support index {i} out of range 0..{len}")))? += 1;
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn add(&mut self, index: usize, n: u64) {
        self.counts[index] += n;
    }
}

/// Region probabilities in linear and log space.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionProbs {
    c: Vec<f64>,
    log_c: Vec<f64>,
}

impl RegionProbs {
    fn from_linear(c: Vec<f64>) -> Self {
        let log_c = c.iter().map(|&x| x.ln()).collect();
        Self {
            c: c.into_iter().map(|x| x.max(LINEAR_FLOOR)).collect(),
            log_c,
        }
    }

    fn from_log(log_c: Vec<f64>) -> Self {
        let c = log_c.iter().map(|&l| l.exp().max(LINEAR_FLOOR)).collect();
        Self { c, log_c }
    }

    pub fn probs(&self) -> &[f64] {
        &self.c
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_c
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }
}

fn check_total(alpha: &DirichletParams) -> Result<f64> {
    let total = alpha.total();
    if !(total < MAX_TOTAL_CONCENTRATION) {
        return Err(invalid(format!(
            "total concentration {total:e} exceeds {MAX_TOTAL_CONCENTRATION:e}"
        )));
    }
    Ok(total)
}

/// `c_k(α)` from continued-fraction incomplete-beta values.
///
/// Each difference is taken between lower tails when they are small and
/// between upper tails otherwise, so neither side cancels catastrophically.
pub fn region_probs(alpha: &DirichletParams, tau: QuantileLevel) -> Result<RegionProbs> {
    let total = check_total(alpha)?;
    let cum = alpha.cumulative();
    let j = alpha.len();
    // (B_k, 1 - B_k) for k = 0..=J.
    let mut tails = Vec::with_capacity(j + 1);
    tails.push((1.0, 0.0));
    for &a in &cum[..j - 1] {
        tails.push(beta_reg_tails(a, total - a, tau.get())?);
    }
    tails.push((0.0, 1.0));
    let c = tails
        .windows(2)
        .map(|w| {
            let ((prev_lo, prev_hi), (lo, hi)) = (w[0], w[1]);
            let diff = if lo <= 0.5 {
                prev_lo - lo
            } else {
                hi - prev_hi
            };
            diff.max(0.0)
        })
        .collect();
    Ok(RegionProbs::from_linear(c))
}

/// `ln c_k(α)` from the hypergeometric incomplete-beta series, carried in log
/// space throughout.
///
/// Fails with [`Error::NumericInstability`] when consecutive cumulative
/// probabilities fail to decrease strictly, which signals parameters beyond
/// the reach of double precision.
pub fn log_region_probs(alpha: &DirichletParams, tau: QuantileLevel) -> Result<RegionProbs> {
    let total = check_total(alpha)?;
    let cum = alpha.cumulative();
    let j = alpha.len();
    // (ln B_k, ln(1 - B_k)) for k = 0..=J.
    let mut tails = Vec::with_capacity(j + 1);
    tails.push((0.0, f64::NEG_INFINITY));
    for &a in &cum[..j - 1] {
        tails.push(ln_beta_reg_tails(a, total - a, tau.get())?);
    }
    tails.push((f64::NEG_INFINITY, 0.0));
    let log_c = tails
        .windows(2)
        .enumerate()
        .map(|(k, w)| ln_consecutive_difference(w[0], w[1], k + 1))
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionProbs::from_log(log_c))
}

/// `ln(B_{k−1} − B_k)` from the log tails of both terms.
fn ln_consecutive_difference(prev: (f64, f64), cur: (f64, f64), k: usize) -> Result<f64> {
    let ((ln_prev, ln_prev_upper), (ln_cur, ln_cur_upper)) = (prev, cur);
    if ln_cur == f64::NEG_INFINITY {
        return Ok(ln_prev);
    }
    let unstable = |d: f64| {
        Error::NumericInstability(format!(
            "cumulative region probabilities not strictly decreasing at region {k} (log gap {d:e})"
        ))
    };
    if ln_cur <= -std::f64::consts::LN_2 {
        let d = ln_prev - ln_cur;
        if !(d > 0.0) {
            return Err(unstable(d));
        }
        Ok(ln_cur + log_expm1(d))
    } else {
        // B_{k−1} − B_k = (1 − B_k) − (1 − B_{k−1})
        let d = ln_cur_upper - ln_prev_upper;
        if !(d > 0.0) {
            return Err(unstable(d));
        }
        Ok(ln_cur_upper + log1m_exp(-d))
    }
}

/// Limit of `c_k(α + n)` as a proportionally shrinking `α` goes to zero:
/// binomial `(n − 1, τ)` mass on `n⁺_{k−1}, …, n⁺_k − 1`.
///
/// Atoms with no observations get probability zero (`ln c_k = −∞`).
pub fn small_alpha_region_probs(counts: &CountVector, tau: QuantileLevel) -> Result<RegionProbs> {
    let n = counts.total();
    if n == 0 {
        return Err(invalid(
            "small-concentration limit needs at least one observation",
        ));
    }
    let ln_pmf: Vec<f64> = (0..n)
        .map(|j| ln_binomial_pmf(j, n - 1, tau.get()))
        .collect();
    let mut start = 0usize;
    let log_c = counts
        .counts()
        .iter()
        .map(|&nk| {
            let end = start + nk as usize;
            let l = log_sum_exp(&ln_pmf[start..end]);
            start = end;
            l
        })
        .collect();
    Ok(RegionProbs::from_log(log_c))
}

/// Prior-side companion of [`small_alpha_region_probs`]: `c_k(α) → 1/J`.
pub fn small_alpha_prior_region_prob(support_len: usize) -> f64 {
    1.0 / support_len as f64
}

/// Sampling pmf of the lower empirical quantile's rank among `J` distinct
/// observations from a uniform-weights population:
/// `F_B(⌈τJ⌉−1; J, (j−1)/J) − F_B(⌈τJ⌉−1; J, j/J)`.
pub fn empirical_quantile_pmf(len: usize, tau: QuantileLevel) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(invalid("empirical quantile pmf needs J >= 1"));
    }
    let m = (tau.get() * len as f64).ceil() as i64 - 1;
    let n = len as u64;
    let cdf = (0..=len)
        .map(|j| binomial_cdf(m, n, j as f64 / len as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(cdf.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantile::region_of;
    use crate::random::{dirichlet, stream_rng};
    use rand::Rng;

    fn tau(t: f64) -> QuantileLevel {
        QuantileLevel::new(t).unwrap()
    }

    fn params(a: &[f64]) -> DirichletParams {
        DirichletParams::new(a.to_vec()).unwrap()
    }

    #[test]
    fn closed_form_cases() {
        let c = region_probs(&params(&[1.0, 1.0]), tau(0.5)).unwrap();
        assert!((c.probs()[0] - 0.5).abs() < 1e-15 && (c.probs()[1] - 0.5).abs() < 1e-15);

        let expected = [0.36, 0.48, 0.16];
        let lin = region_probs(&params(&[1.0, 1.0, 1.0]), tau(0.4)).unwrap();
        let log = log_region_probs(&params(&[1.0, 1.0, 1.0]), tau(0.4)).unwrap();
        for (k, e) in expected.iter().enumerate() {
            assert!((lin.probs()[k] - e).abs() < 1e-12);
            assert!((log.log_probs()[k] - e.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn two_point_log_route_is_upper_tail() {
        for (a1, a2, t) in [(2.0, 3.0, 0.3), (0.5, 7.0, 0.9), (40.0, 12.0, 0.6)] {
            let log = log_region_probs(&params(&[a1, a2]), tau(t)).unwrap();
            let expected = beta_reg_tails(a1, a2, t).unwrap().1.ln();
            assert!((log.log_probs()[0] - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn large_counts_sum_to_one() {
        let mut rng = stream_rng(3, 0);
        let mut n = vec![0.0; 50];
        for _ in 0..500 {
            n[rng.random_range(0..50)] += 1.0;
        }
        let alpha = DirichletParams::uniform(50, 1.0)
            .unwrap()
            .add_weights(&n)
            .unwrap();
        let log = log_region_probs(&alpha, tau(0.9)).unwrap();
        let total: f64 = log.log_probs().iter().map(|l| l.exp()).sum();
        assert!((total - 1.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn log_and_linear_routes_agree() {
        let mut rng = stream_rng(5, 0);
        for _ in 0..300 {
            let j = rng.random_range(2..40);
            let scale = [1e-3, 0.1, 1.0, 30.0][rng.random_range(0..4)];
            let alpha: Vec<f64> = (0..j)
                .map(|_| scale * (0.05 + rng.random::<f64>()))
                .collect();
            let alpha = params(&alpha);
            let t = tau(rng.random_range(0.02..0.98));
            let lin = region_probs(&alpha, t).unwrap();
            let log = log_region_probs(&alpha, t).unwrap();
            for (c, l) in lin.probs().iter().zip(log.log_probs()) {
                if *c > 1e-250 {
                    assert!((l.exp() - c).abs() <= 1e-8 * c, "{c} vs {}", l.exp());
                }
            }
            let s: f64 = lin.probs().iter().sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn monte_carlo_region_frequencies() {
        let mut rng = stream_rng(17, 1);
        for (alpha, t) in [
            (vec![0.7, 2.0, 1.3], 0.35),
            (vec![2.0, 0.4, 1.0, 3.0, 0.8], 0.6),
        ] {
            let alpha = params(&alpha);
            let c = region_probs(&alpha, tau(t)).unwrap();
            let draws = 200_000;
            let mut freq = vec![0usize; alpha.len()];
            for _ in 0..draws {
                let theta = dirichlet(alpha.alpha(), &mut rng);
                if let Ok(k) = region_of(theta.probs(), tau(t)) {
                    freq[k.zero_based()] += 1;
                }
            }
            for (f, &p) in freq.iter().zip(c.probs()) {
                let se = (p * (1.0 - p) / draws as f64).sqrt();
                assert!((*f as f64 / draws as f64 - p).abs() < 4.0 * se + 1e-12);
            }
        }
    }

    #[test]
    fn small_alpha_limit() {
        let counts = CountVector::new(vec![1, 1, 1]);
        let lim = small_alpha_region_probs(&counts, tau(0.4)).unwrap();
        for (c, e) in lim.probs().iter().zip([0.36, 0.48, 0.16]) {
            assert!((c - e).abs() < 1e-12);
        }
        assert!(small_alpha_region_probs(&CountVector::zeros(3), tau(0.4)).is_err());
        assert_eq!(small_alpha_prior_region_prob(4), 0.25);

        // Gap shrinks as the concentration shrinks.
        let counts = CountVector::new(vec![2, 0, 1, 3, 1]);
        let lim = small_alpha_region_probs(&counts, tau(0.3)).unwrap();
        let gaps: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&eps| {
                let alpha = DirichletParams::uniform(5, eps)
                    .unwrap()
                    .add_counts(&counts)
                    .unwrap();
                let c = log_region_probs(&alpha, tau(0.3)).unwrap();
                c.log_probs()
                    .iter()
                    .zip(lim.probs())
                    .map(|(l, p)| (l.exp() - p).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
        assert!(gaps[2] < 1e-3);
    }

    #[test]
    fn empirical_quantile_pmf_examples() {
        let p = empirical_quantile_pmf(3, tau(0.5)).unwrap();
        for (a, b) in p.iter().zip([7.0 / 27.0, 13.0 / 27.0, 7.0 / 27.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        for (j, t) in [(1, 0.3), (7, 0.1), (50, 0.77), (333, 0.5)] {
            let s: f64 = empirical_quantile_pmf(j, tau(t)).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        let p = empirical_quantile_pmf(100, tau(0.5)).unwrap();
        let c = region_probs(&DirichletParams::uniform(100, 1.0).unwrap(), tau(0.5)).unwrap();
        let gap = p
            .iter()
            .zip(c.probs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap <= 0.01, "{gap}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(DirichletParams::new(vec![1.0, 0.0]).is_err());
        assert!(DirichletParams::new(vec![1.0]).is_err());
        let huge = params(&[1e13, 1.0]);
        assert!(region_probs(&huge, tau(0.5)).is_err());
        assert!(CountVector::from_indices(3, [0, 5]).is_err());
        let c = CountVector::from_indices(3, [0, 2, 2]).unwrap();
        assert_eq!(c.counts(), &[1, 0, 2]);
    }
}
