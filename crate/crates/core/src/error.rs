use thiserror::Error;

/// Errors raised by the model, estimation and inference routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported wavelet: {family} with {vanishing_moments} vanishing moments")]
    UnsupportedWavelet {
        family: String,
        vanishing_moments: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid of {points} points is too coarse for resolution level {level} (need at least {required})")]
    InsufficientResolution {
        points: usize,
        level: usize,
        required: usize,
    },

    #[error("model is not ergodic: phi1 low = {phi1_low}, phi1 high = {phi1_high}")]
    NonergodicModel { phi1_low: f64, phi1_high: f64 },

    #[error("innovation variance must be finite and non-negative, got {0}")]
    InvalidVariance(f64),

    #[error("degenerate regime split: {n_low} low / {n_high} high points")]
    DegenerateRegime { n_low: usize, n_high: usize },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("bootstrap unstable: {dropped} of {total} replicates failed")]
    BootstrapUnstable { dropped: usize, total: usize },

    #[error("series has zero variance")]
    ConstantSeries,

    #[error("invalid series: {0}")]
    InvalidSeries(String),
}

pub type Result<T> = std::result::Result<T, Error>;
