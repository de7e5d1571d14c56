//! Frequentist comparison intervals for a single quantile: the asymptotic
//! normal interval with a kernel density estimate, and the percentile
//! bootstrap.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::quantile::QuantileLevel;
use crate::special::normal_quantile;

/// Point estimate with a two-sided interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn covers(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Lower empirical quantile `z_(⌈τn⌉)` of already sorted data.
pub fn lower_sample_quantile(sorted: &[f64], tau: QuantileLevel) -> f64 {
    let n = sorted.len();
    let rank = ((tau.get() * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Linearly interpolated sample quantile of sorted data, used for the IQR.
fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule `0.9 · min(sd, IQR/1.34) · n^{−1/5}` on sorted data. When
/// the IQR vanishes but the spread does not, the standard deviation is used
/// alone.
pub fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let sd = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = interpolated_quantile(sorted, 0.75) - interpolated_quantile(sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Gaussian kernel density estimate at `x` with bandwidth `h`.
pub fn gaussian_kde(data: &[f64], h: f64, x: f64) -> f64 {
    let norm = (2.0 * std::f64::consts::PI).sqrt() * h * data.len() as f64;
    data.iter()
        .map(|z| (-0.5 * ((x - z) / h).powi(2)).exp())
        .sum::<f64>()
        / norm
}

fn sorted_copy(data: &[f64]) -> Result<Vec<f64>> {
    if data.iter().any(|x| !x.is_finite()) {
        return Err(invalid("sample contains non-finite values"));
    }
    let mut s = data.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(s)
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("interval level {level} outside (0, 1)")));
    }
    Ok(())
}

/// Sample quantile with the normal interval
/// `β̂ ± z · √(τ(1−τ)) / (f̂(β̂) √n)`.
pub fn clt_interval(data: &[f64], tau: QuantileLevel, level: f64) -> Result<Interval> {
    check_level(level)?;
    if data.len() < 2 {
        return Err(invalid("normal interval needs at least two observations"));
    }
    let sorted = sorted_copy(data)?;
    let h = silverman_bandwidth(&sorted);
    if h <= 0.0 {
        return Err(Error::NumericInstability(
            "zero kernel bandwidth on constant data".into(),
        ));
    }
    let point = lower_sample_quantile(&sorted, tau);
    let density = gaussian_kde(&sorted, h, point);
    let t = tau.get();
    let half = normal_quantile(0.5 + level / 2.0) * (t * (1.0 - t)).sqrt()
        / (density * (sorted.len() as f64).sqrt());
    Ok(Interval {
        point,
        lo: point - half,
        hi: point + half,
    })
}

/// Percentile bootstrap over `resamples` resampled lower sample quantiles.
/// The point estimate is their mean; the endpoints are their order statistics
/// at ranks `⌈B(1−level)/2⌉` and `⌈B(1+level)/2⌉`.
pub fn bootstrap_interval<R: Rng + ?Sized>(
    data: &[f64],
    tau: QuantileLevel,
    resamples: usize,
    level: f64,
    rng: &mut R,
) -> Result<Interval> {
    check_level(level)?;
    if resamples < 100 {
        return Err(invalid(format!(
            "bootstrap needs at least 100 resamples, got {resamples}"
        )));
    }
    if data.is_empty() {
        return Err(invalid("bootstrap of an empty sample"));
    }
    let sorted = sorted_copy(data)?;
    let n = sorted.len();
    let rank = ((tau.get() * n as f64).ceil() as usize).clamp(1, n);
    let mut idx = vec![0usize; n];
    let mut qs: Vec<f64> = (0..resamples)
        .map(|_| {
            // Indices into the sorted sample order like the values they point at.
            idx.iter_mut().for_each(|i| *i = rng.random_range(0..n));
            let (_, kth, _) = idx.select_nth_unstable(rank - 1);
            sorted[*kth]
        })
        .collect();
    qs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let b = resamples as f64;
    let at = |p: f64| qs[((p * b).ceil() as usize).clamp(1, resamples) - 1];
    Ok(Interval {
        point: qs.iter().sum::<f64>() / b,
        lo: at((1.0 - level) / 2.0),
        hi: at((1.0 + level) / 2.0),
    })
}
