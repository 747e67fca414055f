use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("rank deficient matrix: numerical rank {rank} < {expected} (singular value ratio {ratio:.3e})")]
    RankDeficient {
        rank: usize,
        expected: usize,
        ratio: f64,
    },

    #[error("ill-conditioned Gram matrix: condition number {cond:.3e} exceeds {limit:.0e}")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("asymptotic regime violated: {0}")]
    Regime(String),

    #[error("point {z} lies inside the real support [{lo}, {hi}]")]
    InsideSupport { z: f64, lo: f64, hi: f64 },

    #[error("{failed} of {total} trials failed at grid point {grid}")]
    TooManyFailures {
        grid: usize,
        failed: usize,
        total: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error on {path}: {msg}")]
    Serialize { path: PathBuf, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidDims(_) | Error::InvalidArgument(_) | Error::Config(_)
        )
    }
}
