//! Prior builders for the quantile, the per-subpopulation Dirichlet and the
//! mixing hyperprior.

use crate::error::{invalid, Result};
use crate::quantile::{QuantileLevel, Support};
use crate::regions::DirichletParams;
use crate::special::{chi2_1_quantile, log_sum_exp, normal_quantile};

/// Quantile prior `∝ exp(−λ |s_k − δ|)` on the support, normalized.
pub fn discrete_prior(support: &Support, center: f64, decay: f64) -> Result<Vec<f64>> {
    if !(decay > 0.0 && decay.is_finite()) {
        return Err(invalid(format!(
            "prior decay must be positive, got {decay}"
        )));
    }
    if !center.is_finite() {
        return Err(invalid(format!("prior center {center} is not finite")));
    }
    Ok(laplace_log_prior(support.values(), center, decay)
        .into_iter()
        .map(f64::exp)
        .collect())
}

/// Normalized log weights `−λ |x − δ|` over arbitrary points.
pub(crate) fn laplace_log_prior(points: &[f64], center: f64, decay: f64) -> Vec<f64> {
    let log_w: Vec<f64> = points.iter().map(|s| -decay * (s - center).abs()).collect();
    let norm = log_sum_exp(&log_w);
    log_w.into_iter().map(|l| l - norm).collect()
}

/// `τ`-quantile of `Z = −ln X` with `X ~ χ²₁`, i.e. `−ln F⁻¹_{χ²₁}(1 − τ)`.
pub fn neg_log_chi2_quantile(tau: QuantileLevel) -> f64 {
    -chi2_1_quantile(1.0 - tau.get()).ln()
}

/// Offset `γ_τ` of the biased prior center from the true quantile, for the
/// two levels that ship with presets.
pub fn offset_preset(tau: QuantileLevel) -> Option<f64> {
    const PRESETS: [(f64, f64); 2] = [(0.5, 2.333), (0.9, 6.032)];
    PRESETS
        .iter()
        .find(|(t, _)| (t - tau.get()).abs() < 1e-12)
        .map(|&(_, g)| g)
}

/// Shape of the mixing hyperprior's Gaussian bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CricketVariant {
    /// Centre 15, scale 15, for every level.
    #[default]
    Median,
    /// Centre `15 + 15 Φ⁻¹(τ)`, scale 15.
    PerTau,
}

/// Likelihood concentration `α_j = 4 α̃_j + 1/J` with `α̃_j ∝ e^{−0.03 s_j}`
/// summing to one, and mixing hyperprior `λ_j = λ̃_j + 1/J` with a Gaussian
/// bump `λ̃` summing to five.
pub fn cricket_priors(
    support: &Support,
    tau: QuantileLevel,
    variant: CricketVariant,
) -> Result<(DirichletParams, Vec<f64>)> {
    let j = support.len() as f64;
    let s = support.values();
    let min = s[0];
    let alpha_shape: Vec<f64> = s.iter().map(|&x| (-0.03 * (x - min)).exp()).collect();
    let alpha_total: f64 = alpha_shape.iter().sum();
    let alpha = DirichletParams::new(
        alpha_shape
            .iter()
            .map(|a| 4.0 * a / alpha_total + 1.0 / j)
            .collect(),
    )?;

    let center = match variant {
        CricketVariant::Median => 15.0,
        CricketVariant::PerTau => 15.0 + 15.0 * normal_quantile(tau.get()),
    };
    let scale = 15.0;
    let log_bump: Vec<f64> = s
        .iter()
        .map(|&x| -0.5 * ((x - center) / scale).powi(2))
        .collect();
    let peak = log_bump.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bump: Vec<f64> = log_bump.iter().map(|l| (l - peak).exp()).collect();
    let bump_total: f64 = bump.iter().sum();
    let lambda = bump
        .iter()
        .map(|b| 5.0 * b / bump_total + 1.0 / j)
        .collect();
    Ok((alpha, lambda))
}
