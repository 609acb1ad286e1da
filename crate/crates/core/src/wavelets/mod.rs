//! Wavelet filters, point evaluation and truncated series on `[0, 1)`.

mod basis;
mod filters;
mod series;

pub use basis::{BasisSpec, BoundaryMode, WaveletBasis, WaveletKind, DEFAULT_EVAL_DEPTH};
pub use filters::{build_filter_bank, FilterBank, WaveletFamily};
pub use series::{
    basis_row, detail_indices, eval_threshold_series, project_function, WaveletCoefficients, MAX_LEVEL,
};
