//! Truncated wavelet series on the unit interval.
//!
//! A level-`J` series has `2^J` coefficients ordered as
//! `(c00, d00, d10, d11, d20, ..., d_{J-1, 2^(J-1) - 1})`.
//!
//! Haar is used as is. Other bases have supports much wider than the unit
//! interval, so they are brought onto it according to the basis'
//! [`BoundaryMode`]: wrapped periodically (the default), laid over the
//! reflection-extended domain `[-1, 2)` and read on its middle third, or
//! folded back onto `[0, 1)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::{BoundaryMode, WaveletBasis, WaveletKind};
use crate::error::{Error, Result};

pub const MAX_LEVEL: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletCoefficients {
    level: usize,
    c00: f64,
    details: Vec<f64>,
}

impl WaveletCoefficients {
    pub fn new(level: usize, c00: f64, details: Vec<f64>) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::Domain(format!("resolution level {level} exceeds {MAX_LEVEL}")));
        }
        if details.len() + 1 != 1 << level {
            return Err(Error::Domain(format!(
                "level {level} needs {} detail coefficients, got {}",
                (1usize << level) - 1,
                details.len()
            )));
        }
        if !c00.is_finite() || details.iter().any(|d| !d.is_finite()) {
            return Err(Error::Domain("wavelet coefficients must be finite".into()));
        }
        Ok(WaveletCoefficients { level, c00, details })
    }

    pub fn zeros(level: usize) -> Result<Self> {
        Self::new(level, 0.0, vec![0.0; (1usize << level.min(MAX_LEVEL)) - 1])
    }

    /// Builds coefficients from the flat parameter vector `theta = (c00; d)`.
    pub fn from_theta(level: usize, theta: &[f64]) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::Domain("empty coefficient vector".into()));
        }
        Self::new(level, theta[0], theta[1..].to_vec())
    }

    pub fn to_theta(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.push(self.c00);
        out.extend_from_slice(&self.details);
        out
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn c00(&self) -> f64 {
        self.c00
    }

    pub fn details(&self) -> &[f64] {
        &self.details
    }

    /// Detail coefficient `d_{j,k}`.
    pub fn d(&self, j: usize, k: usize) -> f64 {
        assert!(j < self.level && k < 1 << j, "d({j},{k}) out of range");
        self.details[(1 << j) - 1 + k]
    }

    /// Total coefficient count, `2^J`.
    pub fn len(&self) -> usize {
        1 << self.level
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `(j, k)` index pairs in coefficient order, excluding the leading `c00`.
pub fn detail_indices(level: usize) -> impl Iterator<Item = (u32, i64)> {
    (0..level as u32).flat_map(|j| (0..(1i64 << j)).map(move |k| (j, k)))
}

fn mirrored(basis: &WaveletBasis, j: u32, k: i64, u: f64, kind: WaveletKind) -> f64 {
    if basis.is_haar() {
        return basis.scaled(j, k, u, kind);
    }
    match basis.boundary() {
        BoundaryMode::Periodic => {
            let (a, b) = match kind {
                WaveletKind::Father => basis.father_support(),
                WaveletKind::Mother => basis.mother_support(),
            };
            let scale = (1u64 << j) as f64;
            let first = ((k as f64 + a) / scale - u).ceil() as i64;
            let last = ((k as f64 + b) / scale - u).floor() as i64;
            (first..=last).map(|n| basis.scaled(j, k, u + n as f64, kind)).sum()
        }
        BoundaryMode::Extend => basis.scaled(j, k, (u + 1.0) / 3.0, kind),
        BoundaryMode::Fold => {
            basis.scaled(j, k, u, kind) + basis.scaled(j, k, -u, kind) + basis.scaled(j, k, 2.0 - u, kind)
        }
    }
}

/// Values of all `2^level` basis functions at `u`, in coefficient order.
pub fn basis_row(basis: &WaveletBasis, level: usize, u: f64) -> Vec<f64> {
    let mut row = Vec::with_capacity(1 << level);
    row.push(mirrored(basis, 0, 0, u, WaveletKind::Father));
    row.extend(detail_indices(level).map(|(j, k)| mirrored(basis, j, k, u, WaveletKind::Mother)));
    row
}

/// Evaluates the truncated series at `u` in `[0, 1)`.
pub fn eval_threshold_series(basis: &WaveletBasis, coeffs: &WaveletCoefficients, u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain(format!("u = {u} is outside [0, 1)")));
    }
    let row = basis_row(basis, coeffs.level, u);
    let theta = std::iter::once(&coeffs.c00).chain(&coeffs.details);
    Ok(row.iter().zip(theta).map(|(b, c)| b * c).sum())
}

/// Projects samples of `f` taken on the uniform grid `i / n`, `i = 0..n`, onto
/// the level-`level` basis.
///
/// The coefficients are the least-squares fit on the grid (Riemann-sum inner
/// products), so any function in the span is reproduced on the grid. For Haar
/// the basis is orthonormal on the grid and the coefficients are the plain
/// inner products.
pub fn project_function(basis: &WaveletBasis, level: usize, samples: &[f64]) -> Result<WaveletCoefficients> {
    let n = samples.len();
    let required = 1usize << (level + 4);
    if level > MAX_LEVEL || n < required {
        return Err(Error::InsufficientResolution {
            points: n,
            level,
            required,
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("samples must be finite".into()));
    }
    let dim = 1usize << level;
    let mut design = DMatrix::<f64>::zeros(n, dim);
    for i in 0..n {
        for (a, v) in basis_row(basis, level, i as f64 / n as f64).into_iter().enumerate() {
            design[(i, a)] = v;
        }
    }
    let rhs = DVector::from_column_slice(samples);
    let svd = design.svd(true, true);
    let cutoff = 1e-13 * svd.singular_values.max();
    let theta = svd
        .solve(&rhs, cutoff)
        .map_err(|e| Error::Domain(format!("projection failed: {e}")))?;
    WaveletCoefficients::from_theta(level, theta.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelets::WaveletFamily;

    fn step(u: f64) -> f64 {
        if (0.25..0.75).contains(&u) {
            1.5
        } else {
            1.0
        }
    }

    fn step_coeffs() -> WaveletCoefficients {
        let q = 0.125 * 2f64.sqrt();
        WaveletCoefficients::new(2, 1.25, vec![0.0, -q, q]).unwrap()
    }

    #[test]
    fn coefficient_count_is_checked() {
        assert!(WaveletCoefficients::new(2, 1.0, vec![0.0; 2]).is_err());
        assert!(WaveletCoefficients::new(2, 1.0, vec![0.0; 3]).is_ok());
        assert!(WaveletCoefficients::new(1, f64::NAN, vec![0.0]).is_err());
        assert_eq!(WaveletCoefficients::zeros(3).unwrap().len(), 8);
    }

    #[test]
    fn d_indexing() {
        let c = WaveletCoefficients::new(2, 1.0, vec![2.0, 3.0, 4.0]).unwrap();
        assert_eq!(c.d(0, 0), 2.0);
        assert_eq!(c.d(1, 0), 3.0);
        assert_eq!(c.d(1, 1), 4.0);
        assert_eq!(c.to_theta(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn haar_level_one_example() {
        let b = WaveletBasis::haar();
        let c = WaveletCoefficients::new(1, 1.0, vec![0.5]).unwrap();
        assert_eq!(eval_threshold_series(&b, &c, 0.3).unwrap(), 1.5);
        assert_eq!(eval_threshold_series(&b, &c, 0.7).unwrap(), 0.5);
    }

    #[test]
    fn haar_reproduces_step_threshold() {
        let b = WaveletBasis::haar();
        let c = step_coeffs();
        for (u, want) in [(0.1, 1.0), (0.3, 1.5), (0.6, 1.5), (0.9, 1.0)] {
            let got = eval_threshold_series(&b, &c, u).unwrap();
            assert!((got - want).abs() < 1e-15, "{u}: {got}");
        }
    }

    #[test]
    fn zero_coefficients_give_zero() {
        for (family, n) in [(WaveletFamily::Haar, 1), (WaveletFamily::DaubechiesLeastAsymmetric, 4)] {
            let b = WaveletBasis::new(family, n).unwrap();
            let c = WaveletCoefficients::zeros(3).unwrap();
            for u in [0.0, 0.2, 0.5, 0.99] {
                assert_eq!(eval_threshold_series(&b, &c, u).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn domain_is_half_open_unit_interval() {
        let b = WaveletBasis::haar();
        let c = step_coeffs();
        assert!(eval_threshold_series(&b, &c, 1.0).is_err());
        assert!(eval_threshold_series(&b, &c, -0.01).is_err());
        assert!(eval_threshold_series(&b, &c, f64::NAN).is_err());
    }

    #[test]
    fn haar_projections() {
        let b = WaveletBasis::haar();
        let n = 64;
        let ones = vec![1.0; n];
        let c = project_function(&b, 2, &ones).unwrap();
        assert!((c.c00() - 1.0).abs() < 1e-14);
        assert!(c.details().iter().all(|d| d.abs() < 1e-14));

        let steps: Vec<f64> = (0..n).map(|i| step(i as f64 / n as f64)).collect();
        let c = project_function(&b, 2, &steps).unwrap();
        for (got, want) in c.to_theta().iter().zip(step_coeffs().to_theta()) {
            assert!((got - want).abs() < 1e-14);
        }

        let psi: Vec<f64> = (0..32).map(|i| b.mother(i as f64 / 32.0)).collect();
        let c = project_function(&b, 1, &psi).unwrap();
        assert!(c.c00().abs() < 1e-14);
        assert!((c.d(0, 0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn projection_needs_enough_points() {
        let b = WaveletBasis::haar();
        assert!(matches!(
            project_function(&b, 2, &[0.0; 63]),
            Err(Error::InsufficientResolution { required: 64, .. })
        ));
    }
}
