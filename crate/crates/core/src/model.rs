//! Two-regime SETAR(1) models with constant or time-varying thresholds.
//!
//! ```text
//! y(t) = phi0_low  + phi1_low  * y(t-1) + e(t)   if y(t-1) <= gamma(t/T)
//! y(t) = phi0_high + phi1_high * y(t-1) + e(t)   otherwise
//! ```
//!
//! `y(0)` is supplied and the recursion runs for `t = 1..T-1`.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::wavelets::{basis_row, WaveletBasis, WaveletCoefficients};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCoefficients {
    pub phi0_low: f64,
    pub phi1_low: f64,
    pub phi0_high: f64,
    pub phi1_high: f64,
}

impl RegimeCoefficients {
    pub fn new(phi0_low: f64, phi1_low: f64, phi0_high: f64, phi1_high: f64) -> Self {
        RegimeCoefficients {
            phi0_low,
            phi1_low,
            phi0_high,
            phi1_high,
        }
    }

    /// `phi1_low < 1`, `phi1_high < 1` and `phi1_low * phi1_high < 1`.
    pub fn is_ergodic(&self) -> bool {
        self.phi1_low < 1.0 && self.phi1_high < 1.0 && self.phi1_low * self.phi1_high < 1.0
    }

    pub fn check_ergodic(&self) -> Result<()> {
        if self.is_ergodic() {
            Ok(())
        } else {
            Err(Error::NonergodicModel {
                phi1_low: self.phi1_low,
                phi1_high: self.phi1_high,
            })
        }
    }

    /// Conditional mean of `y(t)` given `y(t-1)` in `regime`.
    pub fn predict(&self, regime: Regime, y_prev: f64) -> f64 {
        match regime {
            Regime::Low => self.phi0_low + self.phi1_low * y_prev,
            Regime::High => self.phi0_high + self.phi1_high * y_prev,
        }
    }

    /// `(phi0_low, phi1_low, phi0_high, phi1_high)`
    pub fn to_array(&self) -> [f64; 4] {
        [self.phi0_low, self.phi1_low, self.phi0_high, self.phi1_high]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Low,
    High,
}

impl Regime {
    /// The `<=` rule: a lagged value equal to the threshold is in the low regime.
    pub fn classify(y_prev: f64, gamma: f64) -> Regime {
        if y_prev <= gamma {
            Regime::Low
        } else {
            Regime::High
        }
    }
}

/// Threshold as a function of rescaled time `u = t / T` in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdSpec {
    Constant {
        gamma: f64,
    },
    /// `gamma0 + gamma1 sin(2 pi k u) + gamma2 cos(2 pi k u)`
    Fourier {
        gamma0: f64,
        gamma1: f64,
        gamma2: f64,
        k: u32,
    },
    Wavelet {
        basis: WaveletBasis,
        coeffs: WaveletCoefficients,
    },
    /// `sum_i coeffs[i] u^i`; used for smooth data-generating thresholds.
    Polynomial {
        coeffs: Vec<f64>,
    },
}

impl ThresholdSpec {
    pub fn at(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Domain(format!("u = {u} is outside [0, 1)")));
        }
        Ok(self.at_unchecked(u))
    }

    fn at_unchecked(&self, u: f64) -> f64 {
        match self {
            ThresholdSpec::Constant { gamma } => *gamma,
            ThresholdSpec::Fourier {
                gamma0,
                gamma1,
                gamma2,
                k,
            } => {
                let arg = 2.0 * std::f64::consts::PI * *k as f64 * u;
                gamma0 + gamma1 * arg.sin() + gamma2 * arg.cos()
            }
            ThresholdSpec::Wavelet { basis, coeffs } => {
                let row = basis_row(basis, coeffs.level(), u);
                let theta = std::iter::once(coeffs.c00()).chain(coeffs.details().iter().copied());
                row.iter().zip(theta).map(|(b, c)| b * c).sum()
            }
            ThresholdSpec::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c),
        }
    }

    /// `gamma(t / len)` for `t = 0..len`.
    pub fn path(&self, len: usize) -> Vec<f64> {
        (0..len).map(|t| self.at_unchecked(t as f64 / len as f64)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            ThresholdSpec::Constant { gamma } => gamma.is_finite(),
            ThresholdSpec::Fourier {
                gamma0,
                gamma1,
                gamma2,
                k,
            } => *k > 0 && gamma0.is_finite() && gamma1.is_finite() && gamma2.is_finite(),
            ThresholdSpec::Wavelet { .. } => true,
            ThresholdSpec::Polynomial { coeffs } => !coeffs.is_empty() && coeffs.iter().all(|c| c.is_finite()),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid threshold specification: {self:?}")))
        }
    }
}

/// `gamma(t / T)` for `0 <= t < T`.
pub fn eval_threshold(spec: &ThresholdSpec, t: usize, len: usize) -> Result<f64> {
    if t >= len {
        return Err(Error::Domain(format!("t = {t} is outside 0..{len}")));
    }
    spec.at(t as f64 / len as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    #[default]
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetarModel {
    pub coeffs: RegimeCoefficients,
    pub threshold: ThresholdSpec,
    pub sigma2: f64,
    #[serde(default)]
    pub noise: NoiseFamily,
}

impl SetarModel {
    pub fn new(coeffs: RegimeCoefficients, threshold: ThresholdSpec, sigma2: f64) -> Self {
        SetarModel {
            coeffs,
            threshold,
            sigma2,
            noise: NoiseFamily::Gaussian,
        }
    }
}

/// Observed or simulated series. Timestamps are carried along untouched; the
/// model clock is the row index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamps: Option<Vec<String>>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSeries("series is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite value at index {i}")));
        }
        Ok(TimeSeries {
            values,
            timestamps: None,
        })
    }

    pub fn with_timestamps(values: Vec<f64>, timestamps: Vec<String>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} timestamps for {} values",
                timestamps.len(),
                values.len()
            )));
        }
        let mut s = Self::new(values)?;
        s.timestamps = Some(timestamps);
        Ok(s)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn timestamps(&self) -> Option<&[String]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn require_len(&self, min: usize, what: &str) -> Result<()> {
        if self.len() < min {
            Err(Error::InvalidSeries(format!(
                "{what} needs at least {min} observations, got {}",
                self.len()
            )))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimulationOptions {
    /// Steps discarded before `y(0)`; the threshold is held at `gamma(0)` during burn-in.
    pub burn_in: usize,
}

impl SimulationOptions {
    pub const STANDARD_BURN_IN: usize = 200;
}

/// `n` i.i.d. `N(0, sigma2)` draws from the innovation stream of `seed`.
pub fn draw_innovations(sigma2: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(Error::InvalidVariance(sigma2));
    }
    let sd = sigma2.sqrt();
    let mut rng = stream_rng(seed, Stream::Innovations);
    Ok((0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        })
        .collect())
}

/// Runs the regime recursion from `y0` against a precomputed threshold path.
///
/// `innovations[t - 1]` is added at step `t`; the output has
/// `innovations.len() + 1` values. No ergodicity check is made.
pub fn recurse(coeffs: &RegimeCoefficients, threshold_path: &[f64], y0: f64, innovations: &[f64]) -> Vec<f64> {
    assert!(
        threshold_path.len() > innovations.len(),
        "threshold path shorter than the recursion"
    );
    let mut out = Vec::with_capacity(innovations.len() + 1);
    out.push(y0);
    let mut prev = y0;
    for (t, e) in innovations.iter().enumerate() {
        let regime = Regime::classify(prev, threshold_path[t + 1]);
        prev = coeffs.predict(regime, prev) + e;
        out.push(prev);
    }
    out
}

pub fn simulate(model: &SetarModel, len: usize, y0: f64, seed: u64) -> Result<TimeSeries> {
    simulate_with(model, len, y0, seed, &SimulationOptions::default())
}

pub fn simulate_with(
    model: &SetarModel,
    len: usize,
    y0: f64,
    seed: u64,
    options: &SimulationOptions,
) -> Result<TimeSeries> {
    if len < 2 {
        return Err(Error::Domain(format!("simulation length must be at least 2, got {len}")));
    }
    if !y0.is_finite() {
        return Err(Error::Domain("initial value must be finite".into()));
    }
    model.coeffs.check_ergodic()?;
    model.threshold.validate()?;
    let innovations = draw_innovations(model.sigma2, options.burn_in + len - 1, seed)?;
    let path = model.threshold.path(len);

    let (burn, keep) = innovations.split_at(options.burn_in);
    let mut start = y0;
    for e in burn {
        let regime = Regime::classify(start, path[0]);
        start = model.coeffs.predict(regime, start) + e;
    }
    TimeSeries::new(recurse(&model.coeffs, &path, start, keep))
}

/// Regime of each step `t = 1..T-1`: low iff `y(t-1) <= gamma(t/T)`.
pub fn regime_path(model: &SetarModel, series: &TimeSeries) -> Result<Vec<Regime>> {
    series.require_len(2, "regime_path")?;
    let path = model.threshold.path(series.len());
    Ok(regimes_against(series.values(), &path))
}

pub(crate) fn regimes_against(values: &[f64], threshold_path: &[f64]) -> Vec<Regime> {
    values
        .windows(2)
        .zip(&threshold_path[1..])
        .map(|(w, g)| Regime::classify(w[0], *g))
        .collect()
}
