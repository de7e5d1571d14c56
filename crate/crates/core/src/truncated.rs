//! Exact samplers for a beta law restricted to an interval and for a
//! Dirichlet law restricted to a quantile region `A_k`.
//!
//! The truncated beta sampler dispatches to one of four rejection schemes,
//! reflecting through `Beta(a, b) = 1 − Beta(b, a)` when the parameters fall
//! outside them. Exponent boundaries `a = 1` or `b = 1` go with the `≤ 1`
//! schemes.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::quantile::{region_of, QuantileLevel, RegionIndex, SimplexPoint};
use crate::random::{beta, dirichlet, open01};
use crate::regions::{log_region_probs, DirichletParams};
use crate::special::{ln_beta, ln_beta_interval_prob, ln_beta_reg_tails, log1m_exp, log_sum_exp};

/// Proposals allowed per draw before giving up.
pub const MAX_PROPOSALS: u64 = 1_000_000;

/// Regions with `c_k(α)` below this are refused.
pub const MIN_REGION_PROB: f64 = 1e-12;

/// Rejection attempts on the simple region-2 marginal scheme before moving
/// to the stratified envelope.
const SIMPLE_MARGINAL_TRIES: usize = 64;
const MAX_STRATA: usize = 512;
const STRATUM_RATIO: f64 = 2.0;

/// `Beta(a, b)` restricted to `(lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedBetaParams {
    pub a: f64,
    pub b: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TruncatedBetaParams {
    pub fn new(a: f64, b: f64, lower: f64, upper: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(invalid(format!(
                "beta shapes must be positive, got ({a}, {b})"
            )));
        }
        if !(0.0 <= lower && lower < upper && upper <= 1.0) {
            return Err(invalid(format!(
                "truncation interval ({lower}, {upper}) must satisfy 0 <= L < U <= 1"
            )));
        }
        Ok(Self { a, b, lower, upper })
    }

    fn reflected(self) -> Self {
        Self {
            a: self.b,
            b: self.a,
            lower: 1.0 - self.upper,
            upper: 1.0 - self.lower,
        }
    }
}

/// Which rejection scheme serves a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BetaScheme {
    /// `L = 0`, `U = 1`: plain beta draw.
    Untruncated,
    /// `a ≤ 1`, `b ≤ 1`, `U < 1`: proposal `∝ θ^{a−1}`.
    SmallSmall,
    /// `a ≤ 1`, `b > 1`, `L > 0`: proposal `∝ (1−θ)^{b−1}`.
    SmallLarge,
    /// `a > 1`, `b ≤ 1`: filtered beta draws or proposal `∝ (1−θ)^{b−1}`.
    LargeSmall,
    /// `a > 1`, `b > 1`, mean below `U`: filtered beta draws or an
    /// exponential proposal anchored at `L`.
    LargeLarge,
}

/// Scheme chosen for `p` and whether the draw runs on the reflected
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dispatch {
    pub scheme: BetaScheme,
    pub reflected: bool,
}

pub fn dispatch(p: &TruncatedBetaParams) -> Dispatch {
    let direct = |scheme| Dispatch {
        scheme,
        reflected: false,
    };
    let mirrored = |scheme| Dispatch {
        scheme,
        reflected: true,
    };
    if p.lower == 0.0 && p.upper == 1.0 {
        return direct(BetaScheme::Untruncated);
    }
    match (p.a <= 1.0, p.b <= 1.0) {
        (true, true) if p.upper < 1.0 => direct(BetaScheme::SmallSmall),
        (true, true) => mirrored(BetaScheme::SmallSmall),
        (true, false) if p.lower > 0.0 => direct(BetaScheme::SmallLarge),
        (true, false) => mirrored(BetaScheme::LargeSmall),
        (false, true) => direct(BetaScheme::LargeSmall),
        (false, false) if p.a / (p.a + p.b) < p.upper => direct(BetaScheme::LargeLarge),
        (false, false) => mirrored(BetaScheme::LargeLarge),
    }
}

/// Exact draw from `Beta(a, b)` restricted to `(L, U)`.
pub fn sample_truncated_beta<R: Rng + ?Sized>(p: &TruncatedBetaParams, rng: &mut R) -> Result<f64> {
    let d = dispatch(p);
    let q = if d.reflected { p.reflected() } else { *p };
    let x = match d.scheme {
        BetaScheme::Untruncated => beta(q.a, q.b, rng),
        BetaScheme::SmallSmall => small_small(&q, rng)?,
        BetaScheme::SmallLarge => small_large(&q, rng)?,
        BetaScheme::LargeSmall => large_small(&q, rng)?,
        BetaScheme::LargeLarge => large_large(&q, rng)?,
    };
    Ok(if d.reflected { 1.0 - x } else { x })
}

fn starved(case: &str, p: &TruncatedBetaParams) -> Error {
    Error::SamplerStarved {
        sampler: "truncated beta",
        attempts: MAX_PROPOSALS,
        hint: format!(
            "{case} scheme with a={}, b={}, interval ({}, {})",
            p.a, p.b, p.lower, p.upper
        ),
    }
}

/// Draw from the density `∝ (1−θ)^{b−1}` on `(L, U)` by inversion on the
/// log scale.
fn one_minus_power_proposal<R: Rng + ?Sized>(p: &TruncatedBetaParams, rng: &mut R) -> f64 {
    let ln_hi = (-p.lower).ln_1p();
    let ln_lo = (-p.upper).ln_1p();
    let u = open01(rng);
    let ln_w = ln_hi + ((1.0 - u) * (p.b * (ln_lo - ln_hi)).exp_m1()).ln_1p() / p.b;
    (-ln_w.exp_m1()).clamp(p.lower, p.upper)
}

fn filtered_beta<R: Rng + ?Sized>(p: &TruncatedBetaParams, case: &str, rng: &mut R) -> Result<f64> {
    for _ in 0..MAX_PROPOSALS {
        let x = beta(p.a, p.b, rng);
        if p.lower <= x && x <= p.upper {
            return Ok(x);
        }
    }
    Err(starved(case, p))
}

fn small_small<R: Rng + ?Sized>(p: &TruncatedBetaParams, rng: &mut R) -> Result<f64> {
    let ln_u = p.upper.ln();
    let ln_l = p.lower.ln();
    let ln_1m_u = (-p.upper).ln_1p();
    for _ in 0..MAX_PROPOSALS {
        let u = open01(rng);
        // z = ln(L^a + (U^a − L^a) u) / a, rearranged around U^a.
        let z = ln_u + ((1.0 - u) * (p.a * (ln_l - ln_u)).exp_m1()).ln_1p() / p.a;
        let x = z.exp();
        let ln_accept = (p.b - 1.0) * ((-x).ln_1p() - ln_1m_u);
        if open01(rng).ln() <= ln_accept {
            return Ok(x.clamp(p.lower, p.upper));
        }
    }
    Err(starved("a<=1, b<=1", p))
}

fn small_large<R: Rng + ?Sized>(p: &TruncatedBetaParams, rng: &mut R) -> Result<f64> {
    let ln_l = p.lower.ln();
    for _ in 0..MAX_PROPOSALS {
        let x = one_minus_power_proposal(p, rng);
        let ln_accept = (p.a - 1.0) * (x.ln() - ln_l);
        if open01(rng).ln() <= ln_accept {
            return Ok(x);
        }
    }
    Err(starved("a<=1, b>1", p))
}

fn large_small<R: Rng + ?Sized>(p: &TruncatedBetaParams, rng: &mut R) -> Result<f64> {
    let ln_1m_l = (-p.lower).ln_1p();
    let ln_1m_u = (-p.upper).ln_1p();
    // ln[(1−L)^b − (1−U)^b]
    let ln_mass = p.b * ln_1m_l + log1m_exp(p.b * (ln_1m_u - ln_1m_l));
    let ln_ratio = p.b.ln() + ln_beta(p.a, p.b) - (p.a - 1.0) * p.upper.ln() - ln_mass;
    if ln_ratio <= 0.0 {
        return filtered_beta(p, "a>1, b<=1 filter", rng);
    }
    let ln_u = p.upper.ln();
    for _ in 0..MAX_PROPOSALS {
        let x = one_minus_power_proposal(p, rng);
        let ln_accept = (p.a - 1.0) * (x.ln() - ln_u);
        if open01(rng).ln() <= ln_accept {
            return Ok(x);
        }
    }
    Err(starved("a>1, b<=1", p))
}

fn large_large<R: Rng + ?Sized>(p: &TruncatedBetaParams, rng: &mut R) -> Result<f64> {
    let mean = p.a / (p.a + p.b);
    if p.lower < mean {
        if narrow_around_mean(p, mean)? {
            return split_at_mean(p, mean, rng);
        }
        return filtered_beta(p, "a>1, b>1 filter", rng);
    }
    exponential_envelope(p, rng)
}

/// True when the interval straddles the mean but holds so little mass that
/// filtering whole-line draws would mostly miss it.
fn narrow_around_mean(p: &TruncatedBetaParams, mean: f64) -> Result<bool> {
    let sd = (mean * (1.0 - mean) / (p.a + p.b + 1.0)).sqrt();
    if p.upper - p.lower > 4.0 * sd {
        return Ok(false);
    }
    Ok(ln_beta_interval_prob(p.a, p.b, p.lower, p.upper)? < 0.25f64.ln())
}

/// Picks the side of the mean by its exact mass, then draws the piece whose
/// endpoint is the mean with the exponential envelope.
fn split_at_mean<R: Rng + ?Sized>(p: &TruncatedBetaParams, mean: f64, rng: &mut R) -> Result<f64> {
    let ln_below = ln_beta_interval_prob(p.a, p.b, p.lower, mean)?;
    let ln_above = ln_beta_interval_prob(p.a, p.b, mean, p.upper)?;
    let p_above = (ln_above - log_sum_exp(&[ln_below, ln_above])).exp();
    if open01(rng) < p_above {
        exponential_envelope(&TruncatedBetaParams { lower: mean, ..*p }, rng)
    } else {
        let below = TruncatedBetaParams { upper: mean, ..*p };
        Ok(1.0 - exponential_envelope(&below.reflected(), rng)?)
    }
}

/// Log-concave tail draw: proposal `∝ e^{−λ(θ−L)}` on `(L, U)` where `−λ` is
/// the slope of the log density at `L`.
fn exponential_envelope<R: Rng + ?Sized>(p: &TruncatedBetaParams, rng: &mut R) -> Result<f64> {
    let (l, u) = (p.lower, p.upper);
    let lambda = ((p.b - 1.0) * l - (p.a - 1.0) * (1.0 - l)) / (l * (1.0 - l));
    let width = u - l;
    let ln_l = l.ln();
    let ln_1m_l = (-l).ln_1p();
    for _ in 0..MAX_PROPOSALS {
        let v = open01(rng);
        let x = if (lambda * width).abs() < 1e-12 {
            l + width * v
        } else {
            l - (v * (-lambda * width).exp_m1()).ln_1p() / lambda
        }
        .clamp(l, u);
        let ln_accept = (p.a - 1.0) * (x.ln() - ln_l)
            + (p.b - 1.0) * ((-x).ln_1p() - ln_1m_l)
            + lambda * (x - l);
        if open01(rng).ln() <= ln_accept {
            return Ok(x);
        }
    }
    Err(starved("a>1, b>1 exponential", p))
}

/// Dirichlet(α) restricted to the region `A_k` at level `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDirichletSpec {
    pub alpha: DirichletParams,
    pub region: RegionIndex,
    pub tau: QuantileLevel,
}

impl TruncatedDirichletSpec {
    pub fn new(alpha: DirichletParams, region: RegionIndex, tau: QuantileLevel) -> Result<Self> {
        if region.get() > alpha.len() {
            return Err(invalid(format!(
                "region {} outside 1..={}",
                region.get(),
                alpha.len()
            )));
        }
        Ok(Self { alpha, region, tau })
    }
}

fn truncated<R: Rng + ?Sized>(a: f64, b: f64, lower: f64, upper: f64, rng: &mut R) -> Result<f64> {
    sample_truncated_beta(&TruncatedBetaParams::new(a, b, lower, upper)?, rng)
}

fn check_region_mass(alpha: &[f64], tau: QuantileLevel, region: usize) -> Result<()> {
    let c = log_region_probs(&DirichletParams::new(alpha.to_vec())?, tau)?;
    let log_prob = c.log_probs()[region - 1];
    if log_prob < MIN_REGION_PROB.ln() {
        return Err(Error::RegionTooUnlikely { region, log_prob });
    }
    Ok(())
}

/// Exact draw from the three-component Dirichlet restricted to `A_k`.
pub fn sample_constrained_dirichlet3<R: Rng + ?Sized>(
    spec: &TruncatedDirichletSpec,
    rng: &mut R,
) -> Result<SimplexPoint> {
    if spec.alpha.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: spec.alpha.len(),
        });
    }
    let a: [f64; 3] = spec.alpha.alpha().try_into().expect("length checked");
    check_region_mass(&a, spec.tau, spec.region.get())?;
    with_membership(spec, rng, |rng| {
        draw3(a, spec.region.get(), spec.tau.get(), rng)
    })
}

/// Repeats a construction until its output passes the region predicate; a
/// miss only happens when rounding lands on a boundary.
fn with_membership<R: Rng + ?Sized>(
    spec: &TruncatedDirichletSpec,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> Result<Vec<f64>>,
) -> Result<SimplexPoint> {
    for _ in 0..1000 {
        let theta = SimplexPoint::from_normalized(draw(rng)?);
        if region_of(theta.probs(), spec.tau).ok() == Some(spec.region) {
            return Ok(theta);
        }
    }
    Err(Error::SamplerStarved {
        sampler: "truncated Dirichlet",
        attempts: 1000,
        hint: format!(
            "draws keep landing on the boundary of region {}",
            spec.region.get()
        ),
    })
}

fn draw3<R: Rng + ?Sized>(a: [f64; 3], k: usize, tau: f64, rng: &mut R) -> Result<Vec<f64>> {
    match k {
        1 => {
            let t1 = truncated(a[0], a[1] + a[2], tau, 1.0, rng)?;
            let y = beta(a[1], a[2], rng);
            Ok(vec![t1, (1.0 - t1) * y, (1.0 - t1) * (1.0 - y)])
        }
        2 => {
            let t1 = region2_first(a, tau, rng)?;
            let lower = ((tau - t1) / (1.0 - t1)).max(0.0);
            let y = truncated(a[1], a[2], lower, 1.0, rng)?;
            Ok(vec![t1, (1.0 - t1) * y, (1.0 - t1) * (1.0 - y)])
        }
        _ => {
            let t3 = truncated(a[2], a[0] + a[1], 1.0 - tau, 1.0, rng)?;
            let y = beta(a[0], a[1], rng);
            Ok(vec![(1.0 - t3) * y, (1.0 - t3) * (1.0 - y), t3])
        }
    }
}

/// `ln S(x)` with `S(x) = 1 − F_B((τ−x)/(1−x); a_2, a_3)`, the chance that the
/// second component carries the cumulative sum past `τ` given `θ_1 = x`.
fn ln_cross_prob(a: [f64; 3], tau: f64, x: f64) -> Result<f64> {
    if x >= tau {
        return Ok(0.0);
    }
    let t = (tau - x) / (1.0 - x);
    Ok(ln_beta_reg_tails(a[1], a[2], t)?.1)
}

/// Draws `θ_1` from its marginal given membership in `A_2`, a density
/// `∝ f_B(x; a_1, a_2+a_3) S(x)` on `(0, τ)` with `S` increasing.
///
/// First tries rejection from the truncated beta with acceptance `S(x)`;
/// when that keeps failing, switches to a stratified envelope whose
/// acceptance is at least `1/2` within refined strata.
fn region2_first<R: Rng + ?Sized>(a: [f64; 3], tau: f64, rng: &mut R) -> Result<f64> {
    let proposal = TruncatedBetaParams::new(a[0], a[1] + a[2], 0.0, tau)?;
    for _ in 0..SIMPLE_MARGINAL_TRIES {
        let x = sample_truncated_beta(&proposal, rng)?;
        if open01(rng).ln() <= ln_cross_prob(a, tau, x)? {
            return Ok(x);
        }
    }
    StratifiedMarginal::build(a, tau)?.sample(rng)
}

/// Piecewise envelope for the region-2 marginal: on stratum `[x_i, x_{i+1}]`
/// the weight is `S(x_{i+1}) · P(x_i < X < x_{i+1})`.
struct StratifiedMarginal {
    a: [f64; 3],
    tau: f64,
    edges: Vec<f64>,
    ln_cross_at_right: Vec<f64>,
    ln_weights: Vec<f64>,
}

impl StratifiedMarginal {
    fn build(a: [f64; 3], tau: f64) -> Result<Self> {
        let b = a[1] + a[2];
        // Uniform edges for the bulk plus geometric edges toward zero for the
        // spike of a small first shape.
        let mut edges: Vec<f64> = (0..=16).map(|i| tau * i as f64 / 16.0).collect();
        for i in 1..=16 {
            edges.push(tau / 16.0 * 2f64.powi(-i));
        }
        edges.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        let ln_s = |x: f64| ln_cross_prob(a, tau, x);
        loop {
            let mut refined = Vec::with_capacity(edges.len() * 2);
            let mut changed = false;
            for w in edges.windows(2) {
                refined.push(w[0]);
                let wide = ln_s(w[1])? - ln_s(w[0])? > STRATUM_RATIO.ln();
                if wide && edges.len() + refined.len() < 2 * MAX_STRATA && w[1] - w[0] > 1e-300 {
                    refined.push(0.5 * (w[0] + w[1]));
                    changed = true;
                }
            }
            refined.push(*edges.last().expect("nonempty"));
            edges = refined;
            if !changed || edges.len() > MAX_STRATA {
                break;
            }
        }
        let ln_cross_at_right = edges[1..]
            .iter()
            .map(|&x| ln_s(x))
            .collect::<Result<Vec<_>>>()?;
        let ln_weights = edges
            .windows(2)
            .zip(&ln_cross_at_right)
            .map(|(w, s)| Ok(ln_beta_interval_prob(a[0], b, w[0], w[1])? + s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            a,
            tau,
            edges,
            ln_cross_at_right,
            ln_weights,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let norm = log_sum_exp(&self.ln_weights);
        let probs: Vec<f64> = self.ln_weights.iter().map(|l| (l - norm).exp()).collect();
        for _ in 0..MAX_PROPOSALS {
            let i = crate::random::categorical(&probs, rng);
            let x = truncated(
                self.a[0],
                self.a[1] + self.a[2],
                self.edges[i],
                self.edges[i + 1],
                rng,
            )?;
            let ln_accept = ln_cross_prob(self.a, self.tau, x)? - self.ln_cross_at_right[i];
            if open01(rng).ln() <= ln_accept {
                return Ok(x);
            }
        }
        Err(Error::SamplerStarved {
            sampler: "region-2 marginal",
            attempts: MAX_PROPOSALS,
            hint: format!("alpha={:?}, tau={}", self.a, self.tau),
        })
    }
}

/// Scales a Dirichlet(sub) draw by `total` into `out`.
fn fill_scaled<R: Rng + ?Sized>(out: &mut Vec<f64>, sub: &[f64], total: f64, rng: &mut R) {
    if sub.len() == 1 {
        out.push(total);
    } else {
        out.extend(dirichlet(sub, rng).probs().iter().map(|p| p * total));
    }
}

/// Exact draw from the `J`-component Dirichlet restricted to `A_k`, by
/// aggregating to three components, drawing the constrained triple and
/// splitting the aggregates with independent Dirichlet draws.
pub fn sample_constrained_dirichlet<R: Rng + ?Sized>(
    spec: &TruncatedDirichletSpec,
    rng: &mut R,
) -> Result<SimplexPoint> {
    let alpha = spec.alpha.alpha();
    let j = alpha.len();
    let k = spec.region.get();
    let tau = spec.tau.get();
    if j == 2 {
        check_region_mass(alpha, spec.tau, k)?;
        return with_membership(spec, rng, |rng| {
            let t1 = if k == 1 {
                truncated(alpha[0], alpha[1], tau, 1.0, rng)?
            } else {
                truncated(alpha[0], alpha[1], 0.0, tau, rng)?
            };
            Ok(vec![t1, 1.0 - t1])
        });
    }
    if j == 3 {
        return sample_constrained_dirichlet3(spec, rng);
    }
    let sum = |r: std::ops::Range<usize>| alpha[r].iter().sum::<f64>();
    let (triple, region3) = if k == 1 {
        ([alpha[0], sum(1..j - 1), alpha[j - 1]], 1)
    } else if k == j {
        ([sum(0..j - 2), alpha[j - 2], alpha[j - 1]], 3)
    } else {
        ([sum(0..k - 1), alpha[k - 1], sum(k..j)], 2)
    };
    check_region_mass(&triple, spec.tau, region3)?;
    with_membership(spec, rng, |rng| {
        let t = draw3(triple, region3, tau, rng)?;
        let mut theta = Vec::with_capacity(j);
        if k == 1 {
            theta.push(t[0]);
            fill_scaled(&mut theta, &alpha[1..j - 1], t[1], rng);
            theta.push(t[2]);
        } else if k == j {
            fill_scaled(&mut theta, &alpha[..j - 2], t[0], rng);
            theta.push(t[1]);
            theta.push(t[2]);
        } else {
            fill_scaled(&mut theta, &alpha[..k - 1], t[0], rng);
            theta.push(t[1]);
            fill_scaled(&mut theta, &alpha[k..], t[2], rng);
        }
        Ok(theta)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{ks_pvalue, ks_statistic};
    use crate::random::stream_rng;
    use crate::regions::region_probs;
    use crate::special::beta_reg;

    fn tau(t: f64) -> QuantileLevel {
        QuantileLevel::new(t).unwrap()
    }

    fn truncated_cdf(p: TruncatedBetaParams) -> impl Fn(f64) -> f64 {
        let lo = beta_reg(p.a, p.b, p.lower).unwrap();
        let hi = beta_reg(p.a, p.b, p.upper).unwrap();
        move |x| (beta_reg(p.a, p.b, x).unwrap() - lo) / (hi - lo)
    }

    #[test]
    fn dispatch_table() {
        let d = |a, b, l, u| dispatch(&TruncatedBetaParams::new(a, b, l, u).unwrap());
        assert_eq!(d(0.5, 0.5, 0.1, 0.6).scheme, BetaScheme::SmallSmall);
        assert!(d(0.5, 0.5, 0.1, 1.0).reflected);
        assert_eq!(d(1.0, 1.0, 0.2, 0.7).scheme, BetaScheme::SmallSmall);
        assert_eq!(d(0.5, 3.0, 0.1, 0.6).scheme, BetaScheme::SmallLarge);
        let r = d(0.5, 3.0, 0.0, 0.6);
        assert_eq!((r.scheme, r.reflected), (BetaScheme::LargeSmall, true));
        assert_eq!(d(3.0, 0.5, 0.0, 0.6).scheme, BetaScheme::LargeSmall);
        assert_eq!(d(3.0, 5.0, 0.5, 0.9).scheme, BetaScheme::LargeLarge);
        let r = d(5.0, 3.0, 0.1, 0.5);
        assert_eq!((r.scheme, r.reflected), (BetaScheme::LargeLarge, true));
        assert_eq!(d(2.0, 2.0, 0.0, 1.0).scheme, BetaScheme::Untruncated);
        assert!(TruncatedBetaParams::new(1.0, 1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn uniform_case_mean() {
        let p = TruncatedBetaParams::new(1.0, 1.0, 0.2, 0.7).unwrap();
        let mut rng = stream_rng(1, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_truncated_beta(&p, &mut rng).unwrap())
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        assert!((m - 0.45).abs() < 4.0 * 0.5 / 12f64.sqrt() / (n as f64).sqrt());
        assert!(xs.iter().all(|&x| (0.2..=0.7).contains(&x)));
    }

    #[test]
    fn every_scheme_passes_ks() {
        let cases = [
            (0.5, 0.5, 0.1, 0.6),
            (0.3, 4.0, 0.05, 0.5),
            (4.0, 0.4, 0.2, 0.9),
            (4.0, 0.4, 0.0, 0.3),
            (3.0, 5.0, 0.5, 0.9),
            (3.0, 5.0, 0.2, 0.9),
            (60.0, 40.0, 0.595, 0.605),
            (2.0, 30.0, 0.4, 1.0),
        ];
        for (i, &(a, b, l, u)) in cases.iter().enumerate() {
            let p = TruncatedBetaParams::new(a, b, l, u).unwrap();
            let mut rng = stream_rng(100 + i as u64, 0);
            let xs: Vec<f64> = (0..20_000)
                .map(|_| sample_truncated_beta(&p, &mut rng).unwrap())
                .collect();
            assert!(xs.iter().all(|&x| l <= x && x <= u));
            let d = ks_statistic(&xs, truncated_cdf(p));
            let pv = ks_pvalue(d, xs.len());
            assert!(pv > 0.001, "case {i} {p:?}: p = {pv}");
        }
    }

    #[test]
    fn region_membership_and_filter_oracle() {
        let alpha = DirichletParams::uniform(3, 1.0).unwrap();
        let t = tau(0.4);
        let mut rng = stream_rng(7, 0);
        let k2 =
            TruncatedDirichletSpec::new(alpha.clone(), RegionIndex::new(2, 3).unwrap(), t).unwrap();
        let n = 40_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let theta = sample_constrained_dirichlet3(&k2, &mut rng).unwrap();
            assert!(k2.region.contains(&theta, t));
            sum += theta.probs()[0];
        }
        let mut filt = Vec::new();
        while filt.len() < n {
            let theta = dirichlet(&[1.0, 1.0, 1.0], &mut rng);
            if region_of(theta.probs(), t).ok() == Some(k2.region) {
                filt.push(theta.probs()[0]);
            }
        }
        let fm = crate::diagnostics::mean(&filt);
        let se = (2.0 * crate::diagnostics::variance(&filt) / n as f64).sqrt();
        assert!((sum / n as f64 - fm).abs() < 4.0 * se);
    }

    #[test]
    fn stratified_marginal_matches_simple_scheme() {
        // Both paths for θ_1 | A_2 must target the same law.
        let a = [2.0, 0.7, 3.0];
        let t = 0.35;
        let strat = StratifiedMarginal::build(a, t).unwrap();
        let mut rng = stream_rng(9, 0);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| strat.sample(&mut rng).unwrap()).collect();
        let proposal = TruncatedBetaParams::new(a[0], a[1] + a[2], 0.0, t).unwrap();
        let mut ys = Vec::with_capacity(n);
        while ys.len() < n {
            let x = sample_truncated_beta(&proposal, &mut rng).unwrap();
            if open01(&mut rng).ln() <= ln_cross_prob(a, t, x).unwrap() {
                ys.push(x);
            }
        }
        let se = ((crate::diagnostics::variance(&xs) + crate::diagnostics::variance(&ys))
            / n as f64)
            .sqrt();
        assert!(
            (crate::diagnostics::mean(&xs) - crate::diagnostics::mean(&ys)).abs() < 4.0 * se,
            "{} {} {se}",
            crate::diagnostics::mean(&xs),
            crate::diagnostics::mean(&ys)
        );
    }

    #[test]
    fn mixture_reconstructs_dirichlet_moments() {
        for alpha in [vec![1.0, 1.0, 1.0], vec![0.6, 1.4, 0.9, 2.0, 0.5]] {
            let j = alpha.len();
            let params = DirichletParams::new(alpha.clone()).unwrap();
            let t = tau(0.45);
            let c = region_probs(&params, t).unwrap();
            let mut rng = stream_rng(11, j as u64);
            let n = 60_000;
            let mut m1 = vec![0.0; j];
            let mut m2 = vec![0.0; j];
            for _ in 0..n {
                let k = crate::random::categorical(c.probs(), &mut rng);
                let spec = TruncatedDirichletSpec::new(
                    params.clone(),
                    RegionIndex::new(k + 1, j).unwrap(),
                    t,
                )
                .unwrap();
                let theta = sample_constrained_dirichlet(&spec, &mut rng).unwrap();
                assert!(spec.region.contains(&theta, t));
                for (i, p) in theta.probs().iter().enumerate() {
                    m1[i] += p;
                    m2[i] += p * p;
                }
            }
            let a0: f64 = alpha.iter().sum();
            for i in 0..j {
                let mean = alpha[i] / a0;
                let var = mean * (1.0 - mean) / (a0 + 1.0);
                assert!((m1[i] / n as f64 - mean).abs() < 4.0 * (var / n as f64).sqrt());
                let second = var + mean * mean;
                assert!((m2[i] / n as f64 - second).abs() < 0.01 * second.max(0.05));
            }
        }
    }

    #[test]
    fn rejects_near_impossible_regions() {
        let alpha = DirichletParams::new(vec![1.0, 1.0, 500.0]).unwrap();
        let spec =
            TruncatedDirichletSpec::new(alpha, RegionIndex::new(1, 3).unwrap(), tau(0.5)).unwrap();
        let err = sample_constrained_dirichlet(&spec, &mut stream_rng(1, 0)).unwrap_err();
        assert!(matches!(err, Error::RegionTooUnlikely { region: 1, .. }));
    }
}
