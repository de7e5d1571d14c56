//! Chain and goodness-of-fit diagnostics used by the samplers' checks and by
//! the reports.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Lag-1 sample autocorrelation. A constant series is reported as `1.0`
/// since it has not moved at all.
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    if var == 0.0 {
        return 1.0;
    }
    let cov: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    cov / var
}

/// Monte Carlo standard error of the mean of a correlated chain by
/// non-overlapping batch means (`⌊√n⌋` batches).
pub fn batch_means_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    let batches = (n as f64).sqrt().floor() as usize;
    if batches < 2 {
        return f64::NAN;
    }
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with divisor `n − 1`.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n − F|`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of a KS statistic `d` from `n` observations.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    // Small-sample correction to the Kolmogorov limit.
    let t = d * (sn + 0.12 + 0.11 / sn);
    if t < 0.3 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * t * t).exp();
        p += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Pearson chi-square goodness-of-fit p-value of `observed` counts against
/// expected probabilities. Cells with zero expected probability must have
/// zero counts and are dropped.
pub fn chi_square_pvalue(observed: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(probs) {
        if p > 0.0 {
            let e = p * n as f64;
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        } else if o > 0 {
            return 0.0;
        }
    }
    if cells < 2 {
        return 1.0;
    }
    let dist = ChiSquared::new((cells - 1) as f64).expect("positive degrees of freedom");
    1.0 - dist.cdf(stat)
}
