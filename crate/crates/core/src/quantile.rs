//! Check loss, the expected-loss objective `Ψ(b, θ)`, and the map from a
//! pmf to its quantile and region index.

use crate::error::{invalid, Error, Result};

/// Cumulative sums within this distance of `tau` are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

const SIMPLEX_SUM_TOLERANCE: f64 = 1e-12;

/// Sorted, strictly increasing set of outcome values shared by every
/// (sub)population.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    values: Vec<f64>,
}

impl Support {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid(format!(
                "support needs at least 2 points, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("support value {v} is not finite")));
        }
        if let Some(w) = values.windows(2).find(|w| w[0] >= w[1]) {
            return Err(invalid(format!(
                "support must be strictly increasing ({} >= {})",
                w[0], w[1]
            )));
        }
        Ok(Self { values })
    }

    /// Evenly spaced grid `lo, lo + step, …` up to and including `hi`.
    pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(hi > lo) {
            return Err(invalid(format!("bad grid lo={lo} hi={hi} step={step}")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Self::new((0..n).map(|j| lo + step * j as f64).collect())
    }

    /// `J` points evenly spaced on `[lo, hi]`.
    pub fn linspace(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(invalid("linspace needs at least 2 points"));
        }
        let span = hi - lo;
        Self::new(
            (0..len)
                .map(|j| lo + span * j as f64 / (len - 1) as f64)
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Zero-based index of an exact support value.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        self.values
            .binary_search_by(|v| v.partial_cmp(&value).expect("finite support"))
            .ok()
    }

    /// Zero-based index of the support point nearest to `value`.
    pub fn nearest_index(&self, value: f64) -> usize {
        match self
            .values
            .binary_search_by(|v| v.partial_cmp(&value).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i == self.values.len() => i - 1,
            Err(i) => {
                if value - self.values[i - 1] <= self.values[i] - value {
                    i - 1
                } else {
                    i
                }
            }
        }
    }
}

/// Quantile level `τ ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct QuantileLevel(f64);

impl QuantileLevel {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau < 1.0 {
            Ok(Self(tau))
        } else {
            Err(invalid(format!(
                "quantile level must lie in (0, 1), got {tau}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Probability vector over the support, stored with all `J` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    probs: Vec<f64>,
}

impl SimplexPoint {
    /// Validates nonnegativity and normalizes; the raw sum must already be
    /// within `1e-6` of one.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let sum = Self::checked_sum(&probs)?;
        if (sum - 1.0).abs() > 1e-6 {
            return Err(invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self::normalized_unchecked(probs, sum))
    }

    /// Normalizes an arbitrary nonnegative weight vector.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let sum = Self::checked_sum(&weights)?;
        if !(sum > 0.0) {
            return Err(invalid("weights sum to zero"));
        }
        Ok(Self::normalized_unchecked(weights, sum))
    }

    fn checked_sum(probs: &[f64]) -> Result<f64> {
        if probs.is_empty() {
            return Err(invalid("empty probability vector"));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(invalid(format!(
                "probability {p} is negative or not finite"
            )));
        }
        Ok(probs.iter().sum())
    }

    fn normalized_unchecked(mut probs: Vec<f64>, sum: f64) -> Self {
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOLERANCE {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Self { probs }
    }

    /// Builds a point from draws that are already normalized, e.g. a Dirichlet
    /// sample; only the length is trusted.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// True when every entry is strictly positive.
    pub fn is_interior(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// One-based index `k` of the region `A_k`, where the quantile equals `s_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionIndex(usize);

impl RegionIndex {
    pub fn new(k: usize, support_len: usize) -> Result<Self> {
        if (1..=support_len).contains(&k) {
            Ok(Self(k))
        } else {
            Err(invalid(format!("region {k} outside 1..={support_len}")))
        }
    }

    pub(crate) fn from_zero_based(index: usize) -> Self {
        Self(index + 1)
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Zero-based support index of the region's quantile.
    pub fn zero_based(self) -> usize {
        self.0 - 1
    }

    /// Membership test `Σ_{j<k} θ_j < τ < Σ_{j≤k} θ_j`.
    pub fn contains(self, theta: &SimplexPoint, tau: QuantileLevel) -> bool {
        let k = self.0;
        if k > theta.len() {
            return false;
        }
        let below: f64 = theta.probs[..k - 1].iter().sum();
        let through = below + theta.probs[k - 1];
        below < tau.get() && tau.get() < through
    }
}

/// The check function `ρ_τ(e) = |e| ((1-τ) 1{e<0} + τ 1{e≥0})`.
pub fn check_loss(e: f64, tau: QuantileLevel) -> Result<f64> {
    if !e.is_finite() {
        return Err(invalid(format!("check loss argument {e} is not finite")));
    }
    Ok(raw_check_loss(e, tau.get()))
}

#[inline]
fn raw_check_loss(e: f64, tau: f64) -> f64 {
    if e < 0.0 {
        -e * (1.0 - tau)
    } else {
        e * tau
    }
}

fn check_dims(theta: &SimplexPoint, support: &Support) -> Result<()> {
    if theta.len() != support.len() {
        return Err(Error::DimensionMismatch {
            expected: support.len(),
            got: theta.len(),
        });
    }
    Ok(())
}

/// `Ψ(b, θ) = Σ_j θ_j ρ_τ(s_j - b)`.
pub fn objective_psi(
    b: f64,
    theta: &SimplexPoint,
    support: &Support,
    tau: QuantileLevel,
) -> Result<f64> {
    if !b.is_finite() {
        return Err(invalid(format!("objective argument {b} is not finite")));
    }
    check_dims(theta, support)?;
    Ok(theta
        .probs
        .iter()
        .zip(support.values())
        .map(|(&p, &s)| p * raw_check_loss(s - b, tau.get()))
        .sum())
}

/// One-sided derivative of `Ψ(·, θ)` at `b` in direction `v`.
///
/// `v` must be `+1.0` or `-1.0`.
pub fn directional_derivative(
    b: f64,
    theta: &SimplexPoint,
    support: &Support,
    tau: QuantileLevel,
    v: f64,
) -> Result<f64> {
    if v != 1.0 && v != -1.0 {
        return Err(invalid(format!("direction must be ±1, got {v}")));
    }
    if !b.is_finite() {
        return Err(invalid(format!("derivative point {b} is not finite")));
    }
    check_dims(theta, support)?;
    let t = tau.get();
    let rho_neg_v = raw_check_loss(-v, t);
    Ok(theta
        .probs
        .iter()
        .zip(support.values())
        .map(|(&p, &s)| {
            if s < b {
                (1.0 - t) * p * v
            } else if s > b {
                -t * p * v
            } else {
                p * rho_neg_v
            }
        })
        .sum())
}

/// Quantile `β = s_k` of `θ` and its region, found by one cumulative-sum scan.
///
/// Fails with [`Error::NonUniqueQuantile`] when some partial sum is within
/// [`TIE_TOLERANCE`] of `τ`.
pub fn quantile_of(
    theta: &SimplexPoint,
    support: &Support,
    tau: QuantileLevel,
) -> Result<(f64, RegionIndex)> {
    check_dims(theta, support)?;
    let region = region_of(theta.probs(), tau)?;
    Ok((support.value(region.zero_based()), region))
}

/// Region index of a probability vector (no support needed).
pub fn region_of(probs: &[f64], tau: QuantileLevel) -> Result<RegionIndex> {
    let t = tau.get();
    let mut cum = 0.0;
    let last = probs.len().saturating_sub(1);
    for (j, &p) in probs.iter().enumerate() {
        cum += p;
        if j < last && (cum - t).abs() <= TIE_TOLERANCE {
            return Err(Error::NonUniqueQuantile {
                index: j + 1,
                cumsum: cum,
            });
        }
        if cum > t {
            return Ok(RegionIndex::from_zero_based(j));
        }
    }
    // Rounding left the total at or below τ; the last atom carries the quantile.
    Ok(RegionIndex::from_zero_based(last))
}
