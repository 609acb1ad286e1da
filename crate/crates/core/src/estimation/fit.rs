use serde::{Deserialize, Serialize};

use super::optim::{differential_evolution, nelder_mead, DeOutcome, DeSettings, DeStart, NmOutcome, NmSettings};
use super::profile::{ProfileEvaluator, ThresholdFamily};
use super::regression::{conditional_ls, row, BetaVector};
use crate::diagnostics::error_metrics;
use crate::error::{Error, Result};
use crate::model::{SetarModel, TimeSeries};
use crate::rng::{stream_rng, Stream};
use crate::wavelets::WaveletBasis;

/// Hyperparameters of the two-stage search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSettings {
    /// Population size; `None` means ten per parameter.
    pub population: Option<usize>,
    pub generations: usize,
    pub crossover: f64,
    pub weight: f64,
    pub simplex_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            population: None,
            generations: 200,
            crossover: 0.9,
            weight: 0.8,
            simplex_iterations: 500,
            tolerance: 1e-8,
            seed: 0,
        }
    }
}

impl SearchSettings {
    pub fn with_seed(self, seed: u64) -> Self {
        SearchSettings { seed, ..self }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.generations > 0
            && self.population.is_none_or(|p| p >= 4)
            && self.crossover > 0.0
            && self.crossover <= 1.0
            && self.weight > 0.0
            && self.weight <= 2.0
            && self.tolerance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid search settings: {self:?}")))
        }
    }
}

/// Box of admissible threshold parameters plus the search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub settings: SearchSettings,
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, settings: SearchSettings) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Domain("search bounds must be non-empty and of equal length".into()));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i].is_finite() && upper[i].is_finite() && lower[i] < upper[i])) {
            return Err(Error::Domain(format!(
                "search bound {i} is not a finite interval: [{}, {}]",
                lower[i], upper[i]
            )));
        }
        settings.validate()?;
        Ok(SearchSpace { lower, upper, settings })
    }

    /// The level coordinate ranges over the data range widened by half on each
    /// side; the remaining coordinates over `[-range, range]`.
    pub fn for_series(series: &TimeSeries, family: &ThresholdFamily, settings: SearchSettings) -> Result<Self> {
        let y = series.values();
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let range = if hi > lo { hi - lo } else { 1.0 };
        let dim = family.dim();
        let mut lower = vec![-range; dim];
        let mut upper = vec![range; dim];
        lower[0] = lo - 0.5 * range;
        upper[0] = hi + 0.5 * range;
        Self::new(lower, upper, settings)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SearchSpace {
            settings: self.settings.with_seed(seed),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub de_generations: usize,
    pub de_evaluations: usize,
    pub simplex_iterations: usize,
    pub candidates_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    /// `J` for wavelet fits, `k` for Fourier fits.
    pub index: usize,
    pub ssr: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub criterion: String,
    pub entries: Vec<SelectionEntry>,
    pub chosen: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: SetarModel,
    pub family: ThresholdFamily,
    pub theta: Vec<f64>,
    pub beta: BetaVector,
    pub ssr: f64,
    pub sigma2_hat: f64,
    /// `e(t)` for `t = 1..T-1`.
    pub residuals: Vec<f64>,
    pub regime_counts: (usize, usize),
    /// `gamma(t / T)` for `t = 0..T-1`.
    pub threshold_path: Vec<f64>,
    pub y0: f64,
    pub warnings: Vec<String>,
    pub search: Option<SearchSpace>,
    pub summary: Option<SearchSummary>,
    pub selection: Option<SelectionTrace>,
}

impl FitResult {
    pub fn len(&self) -> usize {
        self.threshold_path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.threshold_path.is_empty()
    }

    /// `(phi0_low, phi1_low, phi0_high, phi1_high, sigma2)`
    pub fn estimates(&self) -> [f64; 5] {
        let c = self.model.coeffs;
        [c.phi0_low, c.phi1_low, c.phi0_high, c.phi1_high, self.sigma2_hat]
    }
}

/// Builds the full fit at fixed threshold parameters.
pub fn finalize(series: &TimeSeries, family: &ThresholdFamily, theta: &[f64]) -> Result<FitResult> {
    let evaluator = ProfileEvaluator::new(series, family);
    finalize_with(&evaluator, family, theta)
}

fn finalize_with(evaluator: &ProfileEvaluator, family: &ThresholdFamily, theta: &[f64]) -> Result<FitResult> {
    let series = evaluator.series();
    let spec = family.spec(theta)?;
    let path = evaluator.path(theta);
    let (beta, _) = conditional_ls(series, &path)?;
    let y = series.values();
    let residuals: Vec<f64> = (1..y.len()).map(|t| y[t] - beta.dot(&row(y[t - 1], path[t]))).collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let n_low = (1..y.len()).filter(|&t| y[t - 1] <= path[t]).count();
    let coeffs = beta.to_coefficients();
    let sigma2_hat = ssr / (y.len() - 1) as f64;
    let mut warnings = Vec::new();
    if !coeffs.is_ergodic() {
        warnings.push(format!(
            "estimated coefficients violate the ergodicity condition (phi1 low = {:.4}, phi1 high = {:.4})",
            coeffs.phi1_low, coeffs.phi1_high
        ));
    }
    Ok(FitResult {
        model: SetarModel::new(coeffs, spec, sigma2_hat),
        family: family.clone(),
        theta: theta.to_vec(),
        beta,
        ssr,
        sigma2_hat,
        residuals,
        regime_counts: (n_low, y.len() - 1 - n_low),
        threshold_path: path,
        y0: y[0],
        warnings,
        search: None,
        summary: None,
        selection: None,
    })
}

/// Outcome of the global and local stages before the final fit is assembled.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub theta: Vec<f64>,
    /// Exact profile SSR at `theta`.
    pub value: f64,
    pub de: DeOutcome,
    pub simplex: NmOutcome,
    pub candidates_checked: usize,
}

/// Differential evolution over the box, simplex refinement from its best
/// member, then an exact comparison of the refined point against the final
/// population.
pub fn profile_search(evaluator: &ProfileEvaluator, space: &SearchSpace, start: &DeStart) -> SearchOutcome {
    let dim = space.dim();
    assert_eq!(dim, evaluator.dim(), "search space does not match the threshold family");
    let st = &space.settings;
    let de_settings = DeSettings {
        population: st.population.unwrap_or(10 * dim),
        generations: st.generations,
        crossover: st.crossover,
        weight: st.weight,
        tolerance: st.tolerance,
    };
    let mut rng = stream_rng(st.seed, Stream::Search);
    let f = |theta: &[f64]| evaluator.eval(theta);
    let de = differential_evolution(f, &space.lower, &space.upper, start, &de_settings, &mut rng);
    let nm_settings = NmSettings {
        max_iterations: st.simplex_iterations,
        tolerance: st.tolerance,
    };
    let simplex = nelder_mead(f, &de.best, &space.lower, &space.upper, &nm_settings);

    // Fast values carry rounding from the running sums; settle near-ties exactly.
    let mut candidates: Vec<(&[f64], f64)> = vec![(&simplex.x, simplex.value), (&de.best, de.best_value)];
    candidates.extend(de.population.iter().map(|p| p.as_slice()).zip(de.values.iter().copied()));
    let fast_best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let window = fast_best + 1e-6 * (1.0 + fast_best.abs());
    let mut best: Option<(&[f64], f64)> = None;
    let mut checked = 0;
    for (theta, v) in &candidates {
        if *v > window {
            continue;
        }
        checked += 1;
        let exact = evaluator.exact(theta);
        if best.is_none_or(|b| exact < b.1) {
            best = Some((theta, exact));
        }
    }
    let (theta, value) = best.expect("the best candidate is always inside the window");
    SearchOutcome {
        theta: theta.to_vec(),
        value,
        candidates_checked: checked,
        de,
        simplex,
    }
}

/// Initial population for a series: random members in a box scaled to the
/// bulk of the data, plus the given paths projected onto the family.
fn default_start(evaluator: &ProfileEvaluator, family: &ThresholdFamily, seed_paths: &[Vec<f64>]) -> DeStart {
    let mut sorted = evaluator.series().values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (order_statistic(&sorted, 0.15), order_statistic(&sorted, 0.85));
    let spread = 0.25 * (hi - lo);
    let dim = evaluator.dim();
    // A level-j wavelet has amplitude 2^(j/2); scale its coefficient range down to match.
    let width: Vec<f64> = (0..dim)
        .map(|a| match family {
            ThresholdFamily::Wavelet { .. } if a > 0 => spread * 2f64.powf(-0.5 * a.ilog2() as f64),
            _ => spread,
        })
        .collect();
    let mut init_lo: Vec<f64> = width.iter().map(|w| -w).collect();
    let mut init_hi = width.clone();
    init_lo[0] = lo;
    init_hi[0] = hi;
    DeStart {
        init: Some((init_lo, init_hi)),
        seeds: seed_paths.iter().map(|p| evaluator.project(p)).collect(),
        jitter: Some(width.iter().map(|w| 0.1 * w).collect()),
    }
}

/// Profile least-squares fit of `family` over an explicit search box.
///
/// The search is seeded with the constant-threshold fit.
pub fn fit_in_space(series: &TimeSeries, family: &ThresholdFamily, space: &SearchSpace) -> Result<FitResult> {
    fit_in_space_seeded(series, family, space, &[])
}

/// As [`fit_in_space`], with extra starting threshold paths (length `T` each).
pub fn fit_in_space_seeded(
    series: &TimeSeries,
    family: &ThresholdFamily,
    space: &SearchSpace,
    seed_paths: &[Vec<f64>],
) -> Result<FitResult> {
    series.require_len(16, "threshold estimation")?;
    if seed_paths.iter().any(|p| p.len() != series.len()) {
        return Err(Error::Domain("seed threshold paths must match the series length".into()));
    }
    if space.dim() != family.dim() {
        return Err(Error::Domain(format!(
            "search space has {} coordinates, {} needs {}",
            space.dim(),
            family.label(),
            family.dim()
        )));
    }
    let evaluator = ProfileEvaluator::new(series, family);
    let mut paths: Vec<Vec<f64>> = Vec::with_capacity(seed_paths.len() + 1);
    if let Ok(c) = fit_constant(series) {
        paths.push(c.threshold_path);
    }
    paths.extend_from_slice(seed_paths);
    let outcome = profile_search(&evaluator, space, &default_start(&evaluator, family, &paths));
    let mut fit = finalize_with(&evaluator, family, &outcome.theta).map_err(|e| {
        Error::FitFailed(format!(
            "{}: every candidate threshold leaves a regime with too few points ({e}); best objective {:.6e}, {} evaluations",
            family.label(),
            outcome.value,
            outcome.de.evaluations
        ))
    })?;
    fit.search = Some(space.clone());
    fit.summary = Some(SearchSummary {
        de_generations: outcome.de.generations,
        de_evaluations: outcome.de.evaluations,
        simplex_iterations: outcome.simplex.iterations,
        candidates_checked: outcome.candidates_checked,
    });
    Ok(fit)
}

/// Wavelet-threshold fit at resolution `level`.
pub fn fit_wavelet(series: &TimeSeries, basis: &WaveletBasis, level: usize, settings: &SearchSettings) -> Result<FitResult> {
    fit_wavelet_seeded(series, basis, level, settings, &[])
}

fn fit_wavelet_seeded(
    series: &TimeSeries,
    basis: &WaveletBasis,
    level: usize,
    settings: &SearchSettings,
    seed_paths: &[Vec<f64>],
) -> Result<FitResult> {
    series.require_len(32, "wavelet threshold estimation")?;
    if level == 0 || (1usize << level.min(30)) * 16 > series.len() {
        return Err(Error::Domain(format!(
            "resolution level {level} needs 1 <= J and 2^J <= T/16 (T = {})",
            series.len()
        )));
    }
    let family = ThresholdFamily::Wavelet {
        basis: basis.clone(),
        level,
    };
    let space = SearchSpace::for_series(series, &family, *settings)?;
    fit_in_space_seeded(series, &family, &space, seed_paths)
}

/// Fourier-threshold fit; the frequency with the smallest SSR wins.
pub fn fit_fourier(series: &TimeSeries, k_candidates: &[u32], settings: &SearchSettings) -> Result<FitResult> {
    if k_candidates.is_empty() || k_candidates.contains(&0) {
        return Err(Error::Domain("Fourier frequencies must be a non-empty set of positive integers".into()));
    }
    let mut ks = k_candidates.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut best: Option<FitResult> = None;
    let mut entries = Vec::new();
    for &k in &ks {
        let family = ThresholdFamily::Fourier { k };
        let space = SearchSpace::for_series(series, &family, *settings)?;
        let fit = fit_in_space(series, &family, &space)?;
        entries.push(SelectionEntry {
            index: k as usize,
            ssr: fit.ssr,
            score: fit.ssr,
        });
        if best.as_ref().is_none_or(|b| improves(fit.ssr, b.ssr)) {
            best = Some(fit);
        }
    }
    let mut best = best.expect("at least one frequency");
    let chosen = match best.family {
        ThresholdFamily::Fourier { k } => k as usize,
        _ => unreachable!(),
    };
    best.selection = Some(SelectionTrace {
        criterion: "ssr".into(),
        entries,
        chosen,
    });
    Ok(best)
}

/// Strictly better beyond rounding; near-ties keep the earlier (smaller) candidate.
fn improves(candidate: f64, incumbent: f64) -> bool {
    candidate < incumbent - 1e-9 * incumbent.abs()
}

/// `Q(p)`: the `ceil(p n)`-th smallest value, at least the first.
pub(crate) fn order_statistic(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let idx = ((p * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    sorted[idx - 1]
}

/// Constant-threshold fit by grid search over the observed lagged values
/// between the 15% and 85% sample quantiles.
pub fn fit_constant(series: &TimeSeries) -> Result<FitResult> {
    series.require_len(16, "constant threshold estimation")?;
    let y = series.values();
    let mut sorted = y[..y.len() - 1].to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (order_statistic(&sorted, 0.15), order_statistic(&sorted, 0.85));
    let mut grid: Vec<f64> = sorted.iter().copied().filter(|v| (lo..=hi).contains(v)).collect();
    grid.dedup();

    let family = ThresholdFamily::Constant;
    let evaluator = ProfileEvaluator::new(series, &family);
    let fast: Vec<f64> = grid.iter().map(|g| evaluator.eval(&[*g])).collect();
    let fast_best = fast.iter().cloned().fold(f64::INFINITY, f64::min);
    let window = fast_best + 1e-6 * (1.0 + fast_best.abs());
    let mut best: Option<(f64, f64)> = None;
    for (g, v) in grid.iter().zip(&fast) {
        if *v > window {
            continue;
        }
        let exact = evaluator.exact(&[*g]);
        if best.is_none_or(|b| exact < b.1) {
            best = Some((*g, exact));
        }
    }
    let (gamma, _) = best.ok_or_else(|| Error::FitFailed("empty threshold grid".into()))?;
    finalize_with(&evaluator, &family, &[gamma]).map_err(|e| {
        Error::FitFailed(format!(
            "no grid value in [{lo}, {hi}] gives two regimes with at least 3 points each ({e})"
        ))
    })
}

/// How candidate resolution levels are scored.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectionMode {
    /// RMSE of the fitted threshold path against a known path of length `T`.
    VsTruth(Vec<f64>),
    /// Residual RMSE, `sqrt(SSR / (T - 1))`.
    InSample,
}

pub const MAX_SELECTION_LEVEL: usize = 6;

/// Fits every candidate level and keeps the best-scoring one; ties go to the smaller level.
pub fn select_resolution(
    series: &TimeSeries,
    basis: &WaveletBasis,
    levels: &[usize],
    mode: &SelectionMode,
    settings: &SearchSettings,
) -> Result<(usize, FitResult)> {
    if levels.is_empty() || levels.iter().any(|&j| j == 0 || j > MAX_SELECTION_LEVEL) {
        return Err(Error::Domain(format!(
            "resolution candidates must be a non-empty subset of 1..={MAX_SELECTION_LEVEL}, got {levels:?}"
        )));
    }
    if let SelectionMode::VsTruth(truth) = mode {
        if truth.len() != series.len() {
            return Err(Error::Domain(format!(
                "true threshold path has {} points for a series of {}",
                truth.len(),
                series.len()
            )));
        }
    }
    let mut js = levels.to_vec();
    js.sort_unstable();
    js.dedup();
    let mut entries = Vec::new();
    let mut best: Option<(f64, FitResult)> = None;
    let mut previous: Option<Vec<f64>> = None;
    for &j in &js {
        let seeds: Vec<Vec<f64>> = previous.take().into_iter().collect();
        let fit = fit_wavelet_seeded(series, basis, j, settings, &seeds)?;
        previous = Some(fit.threshold_path.clone());
        let score = match mode {
            SelectionMode::VsTruth(truth) => error_metrics(truth, &fit.threshold_path)?.rmse,
            SelectionMode::InSample => fit.sigma2_hat.sqrt(),
        };
        entries.push(SelectionEntry {
            index: j,
            ssr: fit.ssr,
            score,
        });
        if best.as_ref().is_none_or(|b| improves(score, b.0)) {
            best = Some((score, fit));
        }
    }
    let (_, mut fit) = best.expect("at least one level");
    let chosen = match fit.family {
        ThresholdFamily::Wavelet { level, .. } => level,
        _ => unreachable!(),
    };
    fit.selection = Some(SelectionTrace {
        criterion: match mode {
            SelectionMode::VsTruth(_) => "threshold_rmse".into(),
            SelectionMode::InSample => "residual_rmse".into(),
        },
        entries,
        chosen,
    });
    Ok((chosen, fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistic_convention() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(order_statistic(&v, 0.05), 5.0);
        assert_eq!(order_statistic(&v, 0.95), 95.0);
        assert_eq!(order_statistic(&v, 0.0), 1.0);
        assert_eq!(order_statistic(&v, 1.0), 100.0);
    }

    #[test]
    fn default_bounds() {
        let s = TimeSeries::new((0..40).map(|i| (i % 5) as f64).collect()).unwrap();
        let sp = SearchSpace::for_series(&s, &ThresholdFamily::Fourier { k: 1 }, SearchSettings::default()).unwrap();
        assert_eq!(sp.lower, vec![-2.0, -4.0, -4.0]);
        assert_eq!(sp.upper, vec![6.0, 4.0, 4.0]);
        assert!(SearchSpace::new(vec![1.0], vec![1.0], SearchSettings::default()).is_err());
    }
}
