//! Prior builders, frequentist baselines, the Monte Carlo coverage harness,
//! data ingestion, run configuration and report emission.

pub mod baselines;
pub mod config;
pub mod ingest;
pub mod montecarlo;
pub mod priors;
pub mod report;
pub mod workflows;
