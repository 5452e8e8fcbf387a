//! Error type shared across the crate.

use thiserror::Error;

/// Errors surfaced by pool construction, estimation, search and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a documented invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A term references lags or degrees outside its pool configuration.
    #[error("invalid term: {0}")]
    InvalidTerm(String),

    /// A structure references terms that are not part of the given pool.
    #[error("term not present in pool: {0}")]
    TermNotInPool(String),

    /// The steady-state gain denominator 1 - sigma_y is numerically zero.
    #[error("degenerate static gain: |1 - sigma_y| = {0:e} below threshold")]
    DegenerateStaticGain(f64),

    /// The structure contains clusters with no closed-form static polynomial
    /// (nonlinear output or input-output cross terms).
    #[error("structure has no polynomial static form: contains cluster {0}")]
    UnsupportedClusters(String),

    /// A time series is too short for the requested operation.
    #[error("series too short: {0}")]
    SeriesTooShort(String),

    /// The regression matrix is numerically rank deficient.
    #[error("rank deficient regression: rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    /// A free-run simulation exceeded the divergence bound.
    #[error("free-run diverged at step {step}: |y| = {value:e}")]
    Diverged { step: usize, value: f64 },

    /// Estimation/validation split violates the dataset invariants.
    #[error("split too small: {0}")]
    SplitTooSmall(String),

    /// The candidate plant is not free-run stable on its excitation range.
    #[error("plant unstable: {0}")]
    PlantUnstable(String),

    /// The archive has too few entries for the requested decision procedure.
    #[error("archive too small: {have} entries, need at least {need}")]
    ArchiveTooSmall { have: usize, need: usize },

    /// Genome length does not match the pool it decodes against.
    #[error("genome length {genome} does not match pool size {pool}")]
    GenomeLengthMismatch { genome: usize, pool: usize },

    /// Malformed file contents.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
