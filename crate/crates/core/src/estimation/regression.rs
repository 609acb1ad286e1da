use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RegimeCoefficients, TimeSeries};

/// Fewest points a regime may hold: two coefficients plus one residual degree of freedom.
pub const MIN_REGIME_POINTS: usize = 3;

/// Regression coefficients in the indicator parameterisation
/// `(phi0_high, phi1_high, phi0_low - phi0_high, phi1_low - phi1_high)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaVector {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
}

impl BetaVector {
    pub fn from_array(b: [f64; 4]) -> Self {
        BetaVector {
            b1: b[0],
            b2: b[1],
            b3: b[2],
            b4: b[3],
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.b1, self.b2, self.b3, self.b4]
    }

    pub fn from_coefficients(c: &RegimeCoefficients) -> Self {
        BetaVector {
            b1: c.phi0_high,
            b2: c.phi1_high,
            b3: c.phi0_low - c.phi0_high,
            b4: c.phi1_low - c.phi1_high,
        }
    }

    pub fn to_coefficients(&self) -> RegimeCoefficients {
        RegimeCoefficients {
            phi0_low: self.b1 + self.b3,
            phi1_low: self.b2 + self.b4,
            phi0_high: self.b1,
            phi1_high: self.b2,
        }
    }

    pub fn dot(&self, x: &[f64; 4]) -> f64 {
        self.b1 * x[0] + self.b2 * x[1] + self.b3 * x[2] + self.b4 * x[3]
    }
}

/// `(1, y(t-1), I, y(t-1) I)` with `I = 1` when `y(t-1) <= gamma_t`.
pub fn design_row(series: &TimeSeries, t: usize, gamma_t: f64) -> [f64; 4] {
    assert!(t >= 1 && t < series.len(), "design_row needs 1 <= t < T, got t = {t}");
    row(series.values()[t - 1], gamma_t)
}

#[inline]
pub(crate) fn row(y_prev: f64, gamma: f64) -> [f64; 4] {
    let ind = if y_prev <= gamma { 1.0 } else { 0.0 };
    [1.0, y_prev, ind, y_prev * ind]
}

/// Least squares for `beta` given the threshold path `gamma(t/T)`, `t = 0..T`.
///
/// Sums run over `t = 1..T-1`. Solved by Householder QR of the stacked design.
pub fn conditional_ls(series: &TimeSeries, threshold_path: &[f64]) -> Result<(BetaVector, f64)> {
    let y = series.values();
    if threshold_path.len() != y.len() {
        return Err(Error::Domain(format!(
            "threshold path has {} points for a series of {}",
            threshold_path.len(),
            y.len()
        )));
    }
    series.require_len(2 * MIN_REGIME_POINTS + 1, "conditional least squares")?;
    let n = y.len() - 1;
    let n_low = (1..=n).filter(|&t| y[t - 1] <= threshold_path[t]).count();
    let n_high = n - n_low;
    let degenerate = Error::DegenerateRegime { n_low, n_high };
    if n_low < MIN_REGIME_POINTS || n_high < MIN_REGIME_POINTS {
        return Err(degenerate);
    }

    let x = DMatrix::from_fn(n, 4, |i, j| row(y[i], threshold_path[i + 1])[j]);
    let rhs = DVector::from_column_slice(&y[1..]);
    let qr = x.qr();
    let r = qr.r();
    let scale = (0..4).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..4).any(|i| r[(i, i)].abs() <= 1e-10 * scale) {
        return Err(degenerate);
    }
    let qty = qr.q().tr_mul(&rhs);
    let beta = r.solve_upper_triangular(&qty).ok_or(degenerate)?;
    let beta = BetaVector::from_array([beta[0], beta[1], beta[2], beta[3]]);
    let ssr = (1..=n)
        .map(|t| {
            let e = y[t] - beta.dot(&row(y[t - 1], threshold_path[t]));
            e * e
        })
        .sum();
    Ok((beta, ssr))
}
