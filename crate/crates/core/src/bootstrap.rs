//! Residual bootstrap: percentile intervals for the regression parameters and
//! sup-t simultaneous bands for the threshold path.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit_constant, fit_fourier, fit_in_space, fit_wavelet, FitResult, SearchSettings, ThresholdFamily};
use crate::model::{recurse, simulate, SetarModel, ThresholdSpec, TimeSeries};
use crate::rng::{stream_rng, Stream};

pub const PARAMETER_NAMES: [&str; 5] = ["phi0_low", "phi1_low", "phi0_high", "phi1_high", "sigma2"];

/// Smallest replication count accepted by [`bootstrap_model`].
pub const MIN_REPLICATES: usize = 50;

/// Largest share of failed replicate refits tolerated.
pub const MAX_DROP_SHARE: f64 = 0.10;

pub fn center_residuals(residuals: &[f64]) -> Vec<f64> {
    if residuals.is_empty() {
        return Vec::new();
    }
    let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
    residuals.iter().map(|e| e - mean).collect()
}

/// Bootstrap series from the fitted model: centred residuals drawn with
/// replacement, started at the observed `y(0)` and run against the fitted
/// threshold path.
pub fn resample_path(fit: &FitResult, seed: u64) -> Result<TimeSeries> {
    let pool = center_residuals(&fit.residuals);
    if pool.is_empty() {
        return Err(Error::InvalidSeries("fit has no residuals to resample".into()));
    }
    let mut rng = stream_rng(seed, Stream::Resample);
    let draws: Vec<f64> = (0..fit.len() - 1).map(|_| pool[rng.random_range(0..pool.len())]).collect();
    TimeSeries::new(recurse(&fit.model.coeffs, &fit.threshold_path, fit.y0, &draws))
}

/// `Q_B(p)` under `F_B(g) = #{draws <= g} / B`: the `ceil(p B)`-th smallest draw.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    crate::estimation::order_statistic(sorted, p)
}

/// `[Q_B(0.5 - 0.5 alpha), Q_B(0.5 + 0.5 alpha)]`
pub fn percentile_interval(draws: &[f64], alpha: f64) -> Result<(f64, f64)> {
    if draws.is_empty() || draws.iter().any(|d| !d.is_finite()) {
        return Err(Error::Domain("percentile interval needs finite draws".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((
        empirical_quantile(&sorted, 0.5 - 0.5 * alpha),
        empirical_quantile(&sorted, 0.5 + 0.5 * alpha),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupTBand {
    /// Band centre, the fitted path.
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Pointwise bootstrap mean path.
    pub mean: Vec<f64>,
    /// Pointwise bootstrap standard deviation after flooring.
    pub sd: Vec<f64>,
    /// `M_b` for each replicate.
    pub sup_stats: Vec<f64>,
    pub c_crit: f64,
    pub level: f64,
    /// Number of points whose standard deviation was raised to the floor.
    pub floored: usize,
}

impl SupTBand {
    pub fn contains(&self, path: &[f64]) -> bool {
        path.len() == self.lower.len() && path.iter().zip(self.lower.iter().zip(&self.upper)).all(|(g, (l, u))| l <= g && g <= u)
    }
}

/// Floor applied to the pointwise standard deviation before studentising.
pub fn sd_floor(gamma_hat: f64) -> f64 {
    1e-10 * (1.0 + gamma_hat.abs())
}

/// Sup-t band: `M_b = max_t |g_b(t) - mean(t)| / sd(t)`, `c` the `level`
/// quantile of the `M_b`, band `gamma_hat(t) -/+ c sd(t)`.
pub fn sup_t_band(paths: &[Vec<f64>], gamma_hat: &[f64], level: f64) -> Result<SupTBand> {
    let b = paths.len();
    if b < 2 {
        return Err(Error::Domain(format!("sup-t band needs at least 2 paths, got {b}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("band level must lie in (0, 1), got {level}")));
    }
    let len = gamma_hat.len();
    if paths.iter().any(|p| p.len() != len) {
        return Err(Error::Domain("bootstrap paths and fitted path differ in length".into()));
    }
    let mut mean = vec![0.0; len];
    for p in paths {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= b as f64);
    let mut var = vec![0.0; len];
    for p in paths {
        for ((s, v), m) in var.iter_mut().zip(p).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let mut floored = 0;
    let sd: Vec<f64> = var
        .iter()
        .zip(gamma_hat)
        .map(|(s, g)| {
            let raw = (s / (b - 1) as f64).sqrt();
            let floor = sd_floor(*g);
            if raw < floor {
                floored += 1;
                floor
            } else {
                raw
            }
        })
        .collect();
    let sup_stats: Vec<f64> = paths
        .iter()
        .map(|p| {
            p.iter()
                .zip(&mean)
                .zip(&sd)
                .map(|((v, m), s)| (v - m).abs() / s)
                .fold(0.0, f64::max)
        })
        .collect();
    let mut sorted = sup_stats.clone();
    sorted.sort_by(f64::total_cmp);
    let c_crit = empirical_quantile(&sorted, level);
    Ok(SupTBand {
        lower: gamma_hat.iter().zip(&sd).map(|(g, s)| g - c_crit * s).collect(),
        upper: gamma_hat.iter().zip(&sd).map(|(g, s)| g + c_crit * s).collect(),
        center: gamma_hat.to_vec(),
        mean,
        sd,
        sup_stats,
        c_crit,
        level,
        floored,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ParameterInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Requested replicates.
    pub b: usize,
    pub alpha: f64,
    pub seed: u64,
    pub dropped: usize,
    /// Surviving replicate estimates, in [`PARAMETER_NAMES`] order.
    pub estimates: Vec<[f64; 5]>,
    pub threshold_paths: Vec<Vec<f64>>,
    /// In [`PARAMETER_NAMES`] order.
    pub intervals: [ParameterInterval; 5],
    pub band: SupTBand,
}

/// Refit of a bootstrap series with the same estimator as `fit`.
fn refit(series: &TimeSeries, fit: &FitResult, replicate: u64) -> Result<FitResult> {
    match (&fit.family, &fit.search) {
        (_, Some(space)) => fit_in_space(series, &fit.family, &space.with_seed(space.settings.seed.wrapping_add(replicate))),
        (ThresholdFamily::Constant, None) => fit_constant(series),
        (family, None) => Err(Error::Domain(format!(
            "{} fit carries no search space to reuse",
            family.label()
        ))),
    }
}

/// Residual bootstrap of a fitted model with `b` replicates at level `alpha`.
pub fn bootstrap_model(series: &TimeSeries, fit: &FitResult, b: usize, alpha: f64, seed: u64) -> Result<BootstrapResult> {
    if b < MIN_REPLICATES {
        return Err(Error::Domain(format!("bootstrap needs at least {MIN_REPLICATES} replicates, got {b}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if series.len() != fit.len() {
        return Err(Error::Domain("fit does not belong to this series".into()));
    }
    let refits: Vec<Option<FitResult>> = (0..b as u64)
        .into_par_iter()
        .map(|r| {
            let path = resample_path(fit, seed.wrapping_add(r)).ok()?;
            refit(&path, fit, r).ok()
        })
        .collect();
    let kept: Vec<FitResult> = refits.into_iter().flatten().collect();
    let dropped = b - kept.len();
    if dropped as f64 > MAX_DROP_SHARE * b as f64 || kept.len() < 2 {
        return Err(Error::BootstrapUnstable { dropped, total: b });
    }

    let estimates: Vec<[f64; 5]> = kept.iter().map(|f| f.estimates()).collect();
    let point = fit.estimates();
    let mut intervals = [ParameterInterval {
        estimate: 0.0,
        lower: 0.0,
        upper: 0.0,
    }; 5];
    for (i, slot) in intervals.iter_mut().enumerate() {
        let draws: Vec<f64> = estimates.iter().map(|e| e[i]).collect();
        let (lower, upper) = percentile_interval(&draws, alpha)?;
        *slot = ParameterInterval {
            estimate: point[i],
            lower,
            upper,
        };
    }
    let threshold_paths: Vec<Vec<f64>> = kept.into_iter().map(|f| f.threshold_path).collect();
    let band = sup_t_band(&threshold_paths, &fit.threshold_path, alpha)?;
    Ok(BootstrapResult {
        b,
        alpha,
        seed,
        dropped,
        estimates,
        threshold_paths,
        intervals,
        band,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub monte_carlo_reps: usize,
    /// Runs that produced intervals; coverage is over these.
    pub completed: usize,
    pub b: usize,
    pub alpha: f64,
    /// In [`PARAMETER_NAMES`] order.
    pub parameter_coverage: [f64; 5],
    pub band_coverage: f64,
}

/// Fits `series` with the estimator matching the model's threshold type.
pub fn fit_like(model: &SetarModel, series: &TimeSeries, settings: &SearchSettings) -> Result<FitResult> {
    match &model.threshold {
        ThresholdSpec::Constant { .. } => fit_constant(series),
        ThresholdSpec::Fourier { k, .. } => fit_fourier(series, &[*k], settings),
        ThresholdSpec::Wavelet { basis, coeffs } => fit_wavelet(series, basis, coeffs.level(), settings),
        ThresholdSpec::Polynomial { .. } => Err(Error::Domain(
            "polynomial thresholds have no matching estimator; use a wavelet model".into(),
        )),
    }
}

pub fn coverage_experiment(
    model: &SetarModel,
    len: usize,
    mc_reps: usize,
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<CoverageReport> {
    coverage_experiment_with(model, len, mc_reps, b, alpha, seed, &SearchSettings::default())
}

/// Repeats simulate, fit and bootstrap `mc_reps` times and records how often
/// the intervals and the band contain the true values. Run `m` simulates with
/// seed `seed + m`.
pub fn coverage_experiment_with(
    model: &SetarModel,
    len: usize,
    mc_reps: usize,
    b: usize,
    alpha: f64,
    seed: u64,
    settings: &SearchSettings,
) -> Result<CoverageReport> {
    if mc_reps == 0 {
        return Err(Error::Domain("coverage experiment needs at least one run".into()));
    }
    let truth_params = {
        let c = model.coeffs;
        [c.phi0_low, c.phi1_low, c.phi0_high, c.phi1_high, model.sigma2]
    };
    let truth_path = model.threshold.path(len);
    let runs: Vec<Result<Option<([bool; 5], bool)>>> = (0..mc_reps as u64)
        .into_par_iter()
        .map(|m| {
            let run_seed = seed.wrapping_add(m);
            let series = simulate(model, len, 0.0, run_seed)?;
            let fit = match fit_like(model, &series, &settings.with_seed(run_seed)) {
                Ok(f) => f,
                Err(Error::FitFailed(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let boot = match bootstrap_model(&series, &fit, b, alpha, run_seed) {
                Ok(r) => r,
                Err(Error::BootstrapUnstable { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let mut hit = [false; 5];
            for i in 0..5 {
                hit[i] = boot.intervals[i].contains(truth_params[i]);
            }
            Ok(Some((hit, boot.band.contains(&truth_path))))
        })
        .collect();
    let mut completed = 0;
    let mut counts = [0usize; 5];
    let mut band = 0;
    for r in runs {
        if let Some((hit, in_band)) = r? {
            completed += 1;
            for i in 0..5 {
                counts[i] += hit[i] as usize;
            }
            band += in_band as usize;
        }
    }
    let share = |c: usize| if completed == 0 { 0.0 } else { c as f64 / completed as f64 };
    Ok(CoverageReport {
        monte_carlo_reps: mc_reps,
        completed,
        b,
        alpha,
        parameter_coverage: counts.map(share),
        band_coverage: share(band),
    })
}
