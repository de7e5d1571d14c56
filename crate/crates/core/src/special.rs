//! Special functions and log-space arithmetic.
//!
//! Two independent evaluations of the regularized incomplete beta function
//! live here:
//!
//! - [`beta_reg_tails`] uses the Lentz continued fraction in linear space.
//! - [`ln_beta_reg_tails`] uses the Gauss hypergeometric representation
//!   `B(x; a, b) = ₂F₁(a+b, 1; a+1; x) · x^a (1-x)^b / a` summed as a
//!   positive series and carried entirely in log space.
//!
//! Both evaluate the tail that converges on the near side of the symmetry
//! point `(a+1)/(a+b+2)` and obtain the other tail as a complement, so each
//! returns `(ln) I_x(a, b)` and `(ln) 1 - I_x(a, b)` together.

use crate::error::{Error, Result};

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 200_000;
const SERIES_REL_TOL: f64 = 1e-17;
const SERIES_MAX_TERMS: usize = 20_000_000;

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln(Σ exp(x_i))`, ignoring `-inf` entries. Returns `-inf` when every entry is.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln(e^d - 1)` for `d > 0`.
///
/// A short series is used below `1e-5` where `d` is at the scale of rounding
/// in the caller's differences; the overflow-free form is used above 30.
pub fn log_expm1(d: f64) -> f64 {
    if d <= 0.0 {
        return if d == 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::NAN
        };
    }
    if d < 1e-5 {
        // e^d - 1 = d (1 + d/2 + d²/6 + d³/24 + ...)
        d.ln() + (d / 2.0 + d * d / 6.0 + d * d * d / 24.0).ln_1p()
    } else if d > 30.0 {
        d + (-(-d).exp()).ln_1p()
    } else {
        d.exp_m1().ln()
    }
}

/// `ln(1 - e^l)` for `l ≤ 0`.
pub fn log1m_exp(l: f64) -> f64 {
    if l > 0.0 {
        f64::NAN
    } else if l > -std::f64::consts::LN_2 {
        (-l.exp_m1()).ln()
    } else {
        (-l.exp()).ln_1p()
    }
}

fn check_beta_args(a: f64, b: f64, x: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "incomplete beta shape parameters must be positive and finite, got ({a}, {b})"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!(
            "incomplete beta argument must lie in [0, 1], got {x}"
        )));
    }
    Ok(())
}

fn use_lower_side(a: f64, b: f64, x: f64) -> bool {
    x < (a + 1.0) / (a + b + 2.0)
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(h);
        }
    }
    Err(Error::NumericInstability(format!(
        "incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )))
}

/// `(I_x(a,b), 1 - I_x(a,b))` by continued fraction.
pub fn beta_reg_tails(a: f64, b: f64, x: f64) -> Result<(f64, f64)> {
    check_beta_args(a, b, x)?;
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x == 1.0 {
        return Ok((1.0, 0.0));
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    if use_lower_side(a, b, x) {
        let lower = ln_front.exp() * beta_cf(a, b, x)? / a;
        Ok((lower, 1.0 - lower))
    } else {
        let upper = ln_front.exp() * beta_cf(b, a, 1.0 - x)? / b;
        Ok((1.0 - upper, upper))
    }
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> Result<f64> {
    beta_reg_tails(a, b, x).map(|(lo, _)| lo)
}

/// `ln ₂F₁(a+b, 1; a+1; x)`; valid on the near side of the symmetry point,
/// where every term ratio is below one.
fn ln_hyp2f1_tail_series(a: f64, b: f64, x: f64) -> Result<f64> {
    let mut sum = 1.0f64;
    let mut term = 1.0f64;
    let mut n = 0.0f64;
    for _ in 0..SERIES_MAX_TERMS {
        let ratio = (a + b + n) / (a + 1.0 + n) * x;
        term *= ratio;
        sum += term;
        n += 1.0;
        // Bound on the remaining terms: ratios decrease toward x when b ≥ 1
        // and increase toward x when b < 1.
        let next = (a + b + n) / (a + 1.0 + n) * x;
        let rho = if b >= 1.0 { next } else { x };
        if term * rho / (1.0 - rho) <= SERIES_REL_TOL * sum {
            return Ok(sum.ln());
        }
    }
    Err(Error::NumericInstability(format!(
        "hypergeometric series did not converge for a={a}, b={b}, x={x}"
    )))
}

fn ln_beta_reg_near(a: f64, b: f64, x: f64) -> Result<f64> {
    Ok(a * x.ln() + b * (-x).ln_1p() - a.ln() + ln_hyp2f1_tail_series(a, b, x)? - ln_beta(a, b))
}

/// `(ln I_x(a,b), ln(1 - I_x(a,b)))` through the hypergeometric series.
pub fn ln_beta_reg_tails(a: f64, b: f64, x: f64) -> Result<(f64, f64)> {
    check_beta_args(a, b, x)?;
    if x == 0.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    if x == 1.0 {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    if use_lower_side(a, b, x) {
        let lower = ln_beta_reg_near(a, b, x)?.min(0.0);
        Ok((lower, log1m_exp(lower)))
    } else {
        let upper = ln_beta_reg_near(b, a, 1.0 - x)?.min(0.0);
        Ok((log1m_exp(upper), upper))
    }
}

/// `ln P(lo < X < hi)` for `X ~ Beta(a, b)`, differencing whichever pair of
/// tails is small so the subtraction does not cancel.
pub fn ln_beta_interval_prob(a: f64, b: f64, lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(f64::NEG_INFINITY);
    }
    let (lo_lower, lo_upper) = ln_beta_reg_tails(a, b, lo)?;
    let (hi_lower, hi_upper) = ln_beta_reg_tails(a, b, hi)?;
    Ok(ln_tail_difference(lo_lower, lo_upper, hi_lower, hi_upper))
}

/// Given the log lower/upper tails at two ordered points `p < q` of the same
/// distribution, returns `ln(F(q) - F(p))`.
pub(crate) fn ln_tail_difference(p_lower: f64, p_upper: f64, q_lower: f64, q_upper: f64) -> f64 {
    if p_lower == f64::NEG_INFINITY {
        return q_lower;
    }
    if q_upper == f64::NEG_INFINITY {
        return p_upper;
    }
    if p_lower <= -std::f64::consts::LN_2 {
        // F(q) - F(p) = F(q) (1 - F(p)/F(q))
        let d = q_lower - p_lower;
        if d <= 0.0 {
            return f64::NEG_INFINITY;
        }
        q_lower + log_expm1(d) - d
    } else {
        // F(q) - F(p) = S(p) - S(q) = S(p) (1 - S(q)/S(p))
        let d = p_upper - q_upper;
        if d <= 0.0 {
            return f64::NEG_INFINITY;
        }
        p_upper + log1m_exp(-d)
    }
}

/// `ln f_B(k; n, p)`, the binomial log-pmf.
pub fn ln_binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p == 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let (k, n) = (k as f64, n as f64);
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
        + k * p.ln()
        + (n - k) * (-p).ln_1p()
}

/// Binomial CDF `F_B(k; n, p) = I_{1-p}(n - k, k + 1)`.
pub fn binomial_cdf(k: i64, n: u64, p: f64) -> Result<f64> {
    if k < 0 {
        return Ok(0.0);
    }
    let k = k as u64;
    if k >= n {
        return Ok(1.0);
    }
    if p <= 0.0 {
        return Ok(1.0);
    }
    if p >= 1.0 {
        return Ok(0.0);
    }
    beta_reg((n - k) as f64, (k + 1) as f64, 1.0 - p)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(p)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Quantile of the χ² distribution with one degree of freedom.
pub fn chi2_1_quantile(p: f64) -> f64 {
    let z = normal_quantile(0.5 * (1.0 + p));
    z * z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_expm1_matches_direct_form() {
        for &d in &[1e-12f64, 1e-7, 3e-5, 0.1, 1.0, 5.0, 29.0, 31.0, 200.0] {
            let direct = d.exp_m1().ln();
            assert!(
                (log_expm1(d) - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                "d={d}"
            );
        }
        assert!((log_expm1(800.0) - 800.0).abs() < 1e-12);
        assert_eq!(log_expm1(0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn log1m_exp_is_stable_near_zero() {
        assert!((log1m_exp(-1e-20) - (1e-20f64).ln()).abs() < 1e-12);
        assert!((log1m_exp(-50.0) - (-(-50.0f64).exp()).ln_1p()).abs() < 1e-30);
        assert_eq!(log1m_exp(0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x, I_x(a, 1) = x^a, I_x(1, b) = 1 - (1-x)^b
        for &x in &[0.01, 0.3, 0.5, 0.77, 0.999] {
            let (lo, hi) = beta_reg_tails(1.0, 1.0, x).unwrap();
            assert!((lo - x).abs() < 1e-14 && (hi - (1.0 - x)).abs() < 1e-14);
            assert!((beta_reg(3.5, 1.0, x).unwrap() - x.powf(3.5)).abs() < 1e-13);
            assert!((beta_reg(1.0, 2.5, x).unwrap() - (1.0 - (1.0 - x).powf(2.5))).abs() < 1e-13);
            let (l, u) = ln_beta_reg_tails(3.5, 1.0, x).unwrap();
            assert!((l - 3.5 * x.ln()).abs() < 1e-12);
            assert!((u.exp() - (1.0 - x.powf(3.5))).abs() < 1e-13);
        }
    }

    #[test]
    fn two_routes_agree_across_shapes() {
        let shapes = [0.001, 0.05, 0.5, 1.0, 2.3, 17.0, 160.5, 321.0, 1500.0];
        for &a in &shapes {
            for &b in &shapes {
                for &x in &[1e-6, 0.05, 0.4, 0.5, 0.9, 0.999_999] {
                    let (lo, up) = beta_reg_tails(a, b, x).unwrap();
                    let (llo, lup) = ln_beta_reg_tails(a, b, x).unwrap();
                    for (lin, log) in [(lo, llo), (up, lup)] {
                        if lin > 1e-250 {
                            let rel = (log.exp() - lin).abs() / lin;
                            assert!(rel < 1e-9, "a={a} b={b} x={x}: {lin} vs {}", log.exp());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn matches_statrs_reference() {
        for &(a, b, x) in &[
            (0.3, 0.7, 0.2),
            (5.0, 9.0, 0.35),
            (50.0, 40.0, 0.6),
            (0.01, 3.0, 0.5),
        ] {
            let reference = statrs::function::beta::beta_reg(a, b, x);
            assert!((beta_reg(a, b, x).unwrap() - reference).abs() < 1e-12);
        }
    }

    #[test]
    fn interval_probability_in_far_tails() {
        // Beta(400, 400) between 0.9 and 0.95: both CDF values round to 1.
        let l = ln_beta_interval_prob(400.0, 400.0, 0.9, 0.95).unwrap();
        let (_, s1) = ln_beta_reg_tails(400.0, 400.0, 0.9).unwrap();
        assert!(l.is_finite() && l < -200.0 && (l - s1).abs() < 1e-6);
        let mid = ln_beta_interval_prob(2.0, 3.0, 0.2, 0.6).unwrap().exp();
        let f = |x: f64| beta_reg(2.0, 3.0, x).unwrap();
        assert!((mid - (f(0.6) - f(0.2))).abs() < 1e-14);
        let from_zero = ln_beta_interval_prob(2.0, 3.0, 0.0, 0.6).unwrap().exp();
        assert!((from_zero - f(0.6)).abs() < 1e-14);
        let to_one = ln_beta_interval_prob(2.0, 3.0, 0.2, 1.0).unwrap().exp();
        assert!((to_one - (1.0 - f(0.2))).abs() < 1e-14);
    }

    #[test]
    fn binomial_helpers() {
        let pmf: f64 = (0..=2).map(|k| ln_binomial_pmf(k, 2, 0.4).exp()).sum();
        assert!((pmf - 1.0).abs() < 1e-14);
        assert!((ln_binomial_pmf(1, 2, 0.4).exp() - 0.48).abs() < 1e-14);
        assert!((binomial_cdf(1, 3, 1.0 / 3.0).unwrap() - 20.0 / 27.0).abs() < 1e-14);
        assert_eq!(binomial_cdf(-1, 3, 0.5).unwrap(), 0.0);
        assert_eq!(binomial_cdf(3, 3, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn chi_square_median() {
        assert!((chi2_1_quantile(0.5) - 0.454_936_423_119_572_8).abs() < 1e-9);
    }
}
