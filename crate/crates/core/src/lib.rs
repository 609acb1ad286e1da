pub mod bootstrap;
pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod model;
pub mod studies;
mod rng;
pub mod wavelets;

pub use error::{Error, Result};
pub use model::{
    draw_innovations, eval_threshold, recurse, regime_path, simulate, simulate_with, NoiseFamily, Regime,
    RegimeCoefficients, SetarModel, SimulationOptions, ThresholdSpec, TimeSeries,
};
