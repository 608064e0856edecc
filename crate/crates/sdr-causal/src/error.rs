//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by spectral estimation, filtering and inference routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two spectra that must share a frequency grid have different sizes.
    #[error("frequency grids differ: {left} vs {right} bins")]
    GridMismatch { left: usize, right: usize },

    /// A spectrum that must carry power is identically zero (or its mean is).
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(&'static str),

    /// A time series is shorter than an operation requires.
    #[error("series too short: need at least {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    /// Requested autocovariance lag does not fit in the series.
    #[error("lag {lag} too large for series of length {len}")]
    LagTooLarge { lag: usize, len: usize },

    /// AR coefficients outside the stationarity region.
    #[error("AR coefficients outside the stationarity region")]
    UnstableProcess,

    /// The random coefficient vector was numerically zero even after retries.
    #[error("degenerate coefficient draw after {0} attempts")]
    DegenerateDraw(usize),

    /// A collection that must be non-empty was empty.
    #[error("empty spectrum collection")]
    EmptyCollection,

    /// A parameter failed validation before any numerical work.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
