use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A cumulative probability sits on the level `tau`, so the quantile
    /// is an interval rather than a point.
    #[error("non-unique quantile: cumulative mass {cumsum} through atom {index} equals tau")]
    NonUniqueQuantile { index: usize, cumsum: f64 },

    #[error("numerical instability: {0}")]
    NumericInstability(String),

    #[error("{sampler} starved after {attempts} proposals: {hint}")]
    SamplerStarved {
        sampler: &'static str,
        attempts: u64,
        hint: String,
    },

    #[error("region {region} has probability exp({log_prob:.3}) below the conditioning floor")]
    RegionTooUnlikely { region: usize, log_prob: f64 },

    #[error("subpopulation {id}: {source}")]
    Subpopulation {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
