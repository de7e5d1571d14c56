//! Nonparametric Bayesian inference on quantiles of discrete-support
//! distributions.
//!
//! The quantile of a pmf `θ` on a sorted support is the minimizer of the
//! expected check loss, and it is a step function of `θ`: the simplex splits
//! into regions `A_k` on which the quantile equals `s_k`. Placing an explicit
//! prior on the quantile and a Dirichlet law on `θ` inside each region gives
//! a closed-form posterior for the quantile, a hierarchical model that pools
//! quantiles across subpopulations, and a data-augmentation scheme for right
//! censored observations.
//!
//! Module map:
//!
//! - [`quantile`]: check loss, the expected-loss objective and the region map.
//! - [`regions`]: Dirichlet region probabilities `c_k(α)`, in linear and log
//!   space, their small-concentration limits and the empirical-quantile pmf.
//! - [`posterior`]: exact single-population posterior, rejection sampler for
//!   `θ | D`, and the kernel-weight approximation.
//! - [`truncated`]: truncated beta and region-truncated Dirichlet samplers.
//! - [`hierarchy`]: hierarchical Gibbs samplers, censored-data augmentation,
//!   the censored Bayesian bootstrap and the naive-sampler diagnostic.
//! - [`experiments`]: prior builders, frequentist baselines, the Monte Carlo
//!   coverage harness, data ingestion and report emission.
//!
//! Data-parallel loops (replications, subpopulation sweeps) run on rayon when
//! the `parallel` feature is enabled and fall back to plain iteration
//! otherwise; every random stream is derived from the master seed and the
//! work-item index, so both paths produce identical output.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod hierarchy;
pub mod posterior;
pub mod quantile;
pub mod random;
pub mod regions;
pub mod special;
pub mod truncated;

pub use error::{Error, Result};
pub use exec::Execution;
pub use quantile::{QuantileLevel, RegionIndex, SimplexPoint, Support};
pub use regions::{DirichletParams, RegionProbs};
