//! Profile sum of squared residuals as a function of the threshold parameters.
//!
//! Every threshold family is linear in its parameters, so a candidate path is
//! `B theta` for a fixed `T x dim` matrix `B`. Given the regime split, the
//! indicator regression decouples into one simple regression per regime, which
//! the evaluator scores from running sums.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::regression::{conditional_ls, MIN_REGIME_POINTS};
use crate::error::{Error, Result};
use crate::model::{ThresholdSpec, TimeSeries};
use crate::wavelets::{basis_row, WaveletBasis, WaveletCoefficients};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdFamily {
    Constant,
    Fourier { k: u32 },
    Wavelet { basis: WaveletBasis, level: usize },
}

impl ThresholdFamily {
    pub fn dim(&self) -> usize {
        match self {
            ThresholdFamily::Constant => 1,
            ThresholdFamily::Fourier { .. } => 3,
            ThresholdFamily::Wavelet { level, .. } => 1 << level,
        }
    }

    /// Row-major `len x dim` matrix whose row `t` maps `theta` to `gamma(t / len)`.
    pub fn basis_matrix(&self, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len * self.dim());
        for t in 0..len {
            let u = t as f64 / len as f64;
            match self {
                ThresholdFamily::Constant => out.push(1.0),
                ThresholdFamily::Fourier { k } => {
                    let arg = 2.0 * PI * *k as f64 * u;
                    out.extend_from_slice(&[1.0, arg.sin(), arg.cos()]);
                }
                ThresholdFamily::Wavelet { basis, level } => out.extend(basis_row(basis, *level, u)),
            }
        }
        out
    }

    /// The threshold specification with parameters `theta`.
    pub fn spec(&self, theta: &[f64]) -> Result<ThresholdSpec> {
        if theta.len() != self.dim() {
            return Err(Error::Domain(format!(
                "expected {} threshold parameters, got {}",
                self.dim(),
                theta.len()
            )));
        }
        Ok(match self {
            ThresholdFamily::Constant => ThresholdSpec::Constant { gamma: theta[0] },
            ThresholdFamily::Fourier { k } => ThresholdSpec::Fourier {
                gamma0: theta[0],
                gamma1: theta[1],
                gamma2: theta[2],
                k: *k,
            },
            ThresholdFamily::Wavelet { basis, level } => ThresholdSpec::Wavelet {
                basis: basis.clone(),
                coeffs: WaveletCoefficients::from_theta(*level, theta)?,
            },
        })
    }

    pub fn label(&self) -> String {
        match self {
            ThresholdFamily::Constant => "constant".into(),
            ThresholdFamily::Fourier { k } => format!("fourier(k={k})"),
            ThresholdFamily::Wavelet { basis, level } => {
                format!("wavelet({}{}, J={level})", basis.family().short_name(), basis.vanishing_moments())
            }
        }
    }
}

pub(crate) fn apply_basis(basis: &[f64], dim: usize, theta: &[f64]) -> Vec<f64> {
    basis
        .chunks_exact(dim)
        .map(|row| row.iter().zip(theta).map(|(b, c)| b * c).sum())
        .collect()
}

/// Objective value for a threshold path that leaves a regime too thin to fit.
pub fn degenerate_penalty(series: &TimeSeries, n_low: usize, n_high: usize) -> f64 {
    let shortfall = MIN_REGIME_POINTS.saturating_sub(n_low) + MIN_REGIME_POINTS.saturating_sub(n_high);
    10.0 * series.values().iter().map(|v| v * v).sum::<f64>() + shortfall as f64
}

/// SSR of the conditional least-squares fit at `theta`, or the degenerate penalty.
pub fn profile_objective(series: &TimeSeries, family: &ThresholdFamily, theta: &[f64]) -> Result<f64> {
    let path = apply_basis(&family.basis_matrix(series.len()), family.dim(), theta);
    Ok(exact_ssr(series, &path))
}

pub(crate) fn exact_ssr(series: &TimeSeries, path: &[f64]) -> f64 {
    match conditional_ls(series, path) {
        Ok((_, ssr)) => ssr,
        Err(Error::DegenerateRegime { n_low, n_high }) => degenerate_penalty(series, n_low, n_high),
        Err(_) => degenerate_penalty(series, 0, 0),
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    n: f64,
    x: f64,
    xx: f64,
    z: f64,
    xz: f64,
    zz: f64,
}

impl Sums {
    #[inline]
    fn add(&mut self, x: f64, z: f64) {
        self.n += 1.0;
        self.x += x;
        self.xx += x * x;
        self.z += z;
        self.xz += x * z;
        self.zz += z * z;
    }

    #[inline]
    fn minus(&self, o: &Sums) -> Sums {
        Sums {
            n: self.n - o.n,
            x: self.x - o.x,
            xx: self.xx - o.xx,
            z: self.z - o.z,
            xz: self.xz - o.xz,
            zz: self.zz - o.zz,
        }
    }

    #[inline]
    fn plus(&self, o: &Sums) -> Sums {
        Sums {
            n: self.n + o.n,
            x: self.x + o.x,
            xx: self.xx + o.xx,
            z: self.z + o.z,
            xz: self.xz + o.xz,
            zz: self.zz + o.zz,
        }
    }

    /// Residual sum of squares of the simple regression of `z` on `x`.
    #[inline]
    fn ssr(&self) -> Option<f64> {
        let cxx = self.xx - self.x * self.x / self.n;
        if cxx <= 1e-12 * self.xx.max(f64::MIN_POSITIVE) {
            return None;
        }
        let cxz = self.xz - self.x * self.z / self.n;
        let czz = self.zz - self.z * self.z / self.n;
        Some((czz - cxz * cxz / cxx).max(0.0))
    }
}

struct Segment {
    row: usize,
    /// Lagged values in ascending order, for the regime lookup.
    sorted: Vec<f64>,
    /// `prefix[m]` sums the first `m` sorted points.
    prefix: Vec<Sums>,
}

enum Mode {
    Segments(Vec<Segment>),
    Scan,
}

/// Fast profile SSR for one series and one threshold family.
pub struct ProfileEvaluator<'a> {
    series: &'a TimeSeries,
    dim: usize,
    basis: Vec<f64>,
    x: Vec<f64>,
    z: Vec<f64>,
    total: Sums,
    mode: Mode,
}

impl<'a> ProfileEvaluator<'a> {
    pub fn new(series: &'a TimeSeries, family: &ThresholdFamily) -> Self {
        Self::with_basis(series, family.dim(), family.basis_matrix(series.len()))
    }

    pub(crate) fn with_basis(series: &'a TimeSeries, dim: usize, basis: Vec<f64>) -> Self {
        let y = series.values();
        let len = y.len();
        assert_eq!(basis.len(), len * dim);
        let shift = y.iter().sum::<f64>() / len as f64;
        let x: Vec<f64> = y[..len - 1].iter().map(|v| v - shift).collect();
        let z: Vec<f64> = y[1..].iter().map(|v| v - shift).collect();
        let mut total = Sums::default();
        for (a, b) in x.iter().zip(&z) {
            total.add(*a, *b);
        }

        // Runs of identical basis rows share one threshold value.
        let mut runs: Vec<(usize, usize)> = Vec::new();
        for t in 1..len {
            let same = runs
                .last()
                .is_some_and(|&(start, _)| basis[t * dim..(t + 1) * dim] == basis[start * dim..(start + 1) * dim]);
            if same {
                runs.last_mut().unwrap().1 = t + 1;
            } else {
                runs.push((t, t + 1));
            }
        }
        let mode = if runs.len() <= (len - 1) / 8 {
            let segs = runs
                .into_iter()
                .map(|(start, end)| {
                    let mut order: Vec<usize> = (start..end).collect();
                    order.sort_by(|&a, &b| y[a - 1].total_cmp(&y[b - 1]));
                    let mut prefix = Vec::with_capacity(order.len() + 1);
                    let mut acc = Sums::default();
                    prefix.push(acc);
                    for &t in &order {
                        acc.add(x[t - 1], z[t - 1]);
                        prefix.push(acc);
                    }
                    Segment {
                        row: start,
                        sorted: order.iter().map(|&t| y[t - 1]).collect(),
                        prefix,
                    }
                })
                .collect();
            Mode::Segments(segs)
        } else {
            Mode::Scan
        };

        ProfileEvaluator {
            series,
            dim,
            basis,
            x,
            z,
            total,
            mode,
        }
    }

    pub fn series(&self) -> &TimeSeries {
        self.series
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `gamma(t / T)` for `t = 0..T`.
    pub fn path(&self, theta: &[f64]) -> Vec<f64> {
        apply_basis(&self.basis, self.dim, theta)
    }

    #[inline]
    fn gamma_at(&self, t: usize, theta: &[f64]) -> f64 {
        self.basis[t * self.dim..(t + 1) * self.dim]
            .iter()
            .zip(theta)
            .map(|(b, c)| b * c)
            .sum()
    }

    fn score(&self, low: Sums) -> f64 {
        let high = self.total.minus(&low);
        let (n_low, n_high) = (low.n as usize, high.n as usize);
        if n_low < MIN_REGIME_POINTS || n_high < MIN_REGIME_POINTS {
            return degenerate_penalty(self.series, n_low, n_high);
        }
        match (low.ssr(), high.ssr()) {
            (Some(a), Some(b)) => a + b,
            _ => degenerate_penalty(self.series, n_low, n_high),
        }
    }

    /// Profile SSR at `theta`, accurate to rounding in the running sums.
    pub fn eval(&self, theta: &[f64]) -> f64 {
        let mut low = Sums::default();
        match &self.mode {
            Mode::Segments(segs) => {
                for seg in segs {
                    let g = self.gamma_at(seg.row, theta);
                    let m = seg.sorted.partition_point(|v| *v <= g);
                    low = low.plus(&seg.prefix[m]);
                }
            }
            Mode::Scan => {
                let y = self.series.values();
                for t in 1..y.len() {
                    if y[t - 1] <= self.gamma_at(t, theta) {
                        low.add(self.x[t - 1], self.z[t - 1]);
                    }
                }
            }
        }
        self.score(low)
    }

    /// Profile SSR at `theta` from the QR solution.
    pub fn exact(&self, theta: &[f64]) -> f64 {
        exact_ssr(self.series, &self.path(theta))
    }

    /// Least-squares parameters whose path is closest to `path` (length `T`).
    pub fn project(&self, path: &[f64]) -> Vec<f64> {
        let len = self.series.len();
        assert_eq!(path.len(), len, "path length must match the series");
        let b = DMatrix::from_row_slice(len, self.dim, &self.basis);
        let svd = b.svd(true, true);
        let cutoff = 1e-12 * svd.singular_values.max();
        match svd.solve(&DVector::from_column_slice(path), cutoff) {
            Ok(theta) => theta.iter().copied().collect(),
            Err(_) => vec![0.0; self.dim],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate, RegimeCoefficients, SetarModel};
    use crate::wavelets::WaveletFamily;

    fn sim1(seed: u64) -> TimeSeries {
        let q = 0.125 * 2f64.sqrt();
        let model = SetarModel::new(
            RegimeCoefficients::new(0.5, -0.3, 1.0, 0.3),
            ThresholdSpec::Wavelet {
                basis: WaveletBasis::haar(),
                coeffs: WaveletCoefficients::new(2, 1.25, vec![0.0, -q, q]).unwrap(),
            },
            2.0,
        );
        simulate(&model, 512, 0.0, seed).unwrap()
    }

    #[test]
    fn fast_matches_exact_in_both_modes() {
        let s = sim1(3);
        let families = [
            ThresholdFamily::Constant,
            ThresholdFamily::Fourier { k: 2 },
            ThresholdFamily::Wavelet {
                basis: WaveletBasis::haar(),
                level: 2,
            },
            ThresholdFamily::Wavelet {
                basis: WaveletBasis::new(WaveletFamily::DaubechiesLeastAsymmetric, 4).unwrap(),
                level: 2,
            },
        ];
        for fam in &families {
            let ev = ProfileEvaluator::new(&s, fam);
            for i in 0..20 {
                let theta: Vec<f64> = (0..fam.dim())
                    .map(|d| 1.0 + 0.3 * ((i * 7 + d * 3) as f64).sin())
                    .collect();
                let a = ev.eval(&theta);
                let b = ev.exact(&theta);
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{}: {a} vs {b}", fam.label());
                assert_eq!(b, profile_objective(&s, fam, &theta).unwrap());
            }
        }
    }

    #[test]
    fn segment_mode_is_used_for_piecewise_constant_paths() {
        let s = sim1(4);
        let haar = ProfileEvaluator::new(
            &s,
            &ThresholdFamily::Wavelet {
                basis: WaveletBasis::haar(),
                level: 2,
            },
        );
        assert!(matches!(&haar.mode, Mode::Segments(v) if v.len() == 4));
        let fourier = ProfileEvaluator::new(&s, &ThresholdFamily::Fourier { k: 1 });
        assert!(matches!(fourier.mode, Mode::Scan));
    }

    #[test]
    fn empty_regime_gets_the_penalty() {
        let s = sim1(5);
        let floor = 10.0 * s.values().iter().map(|v| v * v).sum::<f64>();
        let v = profile_objective(&s, &ThresholdFamily::Constant, &[1e6]).unwrap();
        assert!(v >= floor && v.is_finite());
        let ev = ProfileEvaluator::new(&s, &ThresholdFamily::Constant);
        assert_eq!(ev.eval(&[-1e6]), floor + 3.0);
    }
}
