//! Profile conditional least squares for constant, Fourier and wavelet thresholds.

mod fit;
pub mod optim;
mod profile;
mod regression;

pub use fit::{
    finalize, fit_constant, fit_fourier, fit_in_space, fit_in_space_seeded, fit_wavelet, profile_search, select_resolution, FitResult,
    SearchOutcome, SearchSettings, SearchSpace, SearchSummary, SelectionEntry, SelectionMode, SelectionTrace,
    MAX_SELECTION_LEVEL,
};
pub(crate) use fit::order_statistic;
pub use profile::{degenerate_penalty, profile_objective, ProfileEvaluator, ThresholdFamily};
pub use regression::{conditional_ls, design_row, BetaVector, MIN_REGIME_POINTS};
