//! Seeded random streams and the gamma, beta, Dirichlet and categorical
//! variates used by the samplers.
//!
//! Gamma variates are produced on the log scale so that shapes far below one
//! (concentrations such as `1/J` or `1e-6`) do not underflow to zero.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Open01};

use crate::quantile::SimplexPoint;
use crate::special::log_sum_exp;

/// Generator used for every seeded stream.
pub type StreamRng = ChaCha8Rng;

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stable 64-bit FNV-1a hash of a label, used to give each named
/// subpopulation its own stream independent of processing order.
pub fn label_stream(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Uniform draw on the open interval `(0, 1)`.
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Open01.sample(rng)
}

/// `ln G` for `G ~ Gamma(shape, 1)`.
///
/// Shapes below one use `G(a) = G(a + 1) · U^{1/a}`.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
        if g > 0.0 {
            return g.ln();
        }
        // Only reachable for shape at exactly one with an extreme draw.
        return open01(rng).ln();
    }
    let g: f64 = Gamma::new(shape + 1.0, 1.0)
        .expect("positive shape")
        .sample(rng);
    g.ln() + open01(rng).ln() / shape
}

/// `Beta(a, b)` draw.
pub fn beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let la = ln_gamma_variate(a, rng);
    let lb = ln_gamma_variate(b, rng);
    let norm = log_sum_exp(&[la, lb]);
    (la - norm).exp()
}

/// `Dirichlet(α)` draw.
pub fn dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> SimplexPoint {
    let logs: Vec<f64> = alpha.iter().map(|&a| ln_gamma_variate(a, rng)).collect();
    let norm = log_sum_exp(&logs);
    SimplexPoint::from_normalized(logs.into_iter().map(|l| (l - norm).exp()).collect())
}

/// Index drawn with probability proportional to `weights` (nonnegative, not
/// all zero).
pub fn categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return i;
            }
            u -= w;
            last_positive = i;
        }
    }
    last_positive
}
