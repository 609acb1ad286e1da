//! Differencing, sample autocorrelation, Ljung-Box test and path error metrics.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::model::TimeSeries;

/// Applies `z(t) = y(t) - y(t-1)` `order` times.
pub fn difference(series: &TimeSeries, order: usize) -> Result<TimeSeries> {
    if order >= series.len() {
        return Err(Error::Domain(format!(
            "differencing order {order} needs more than {order} observations, got {}",
            series.len()
        )));
    }
    let mut v = series.values().to_vec();
    for _ in 0..order {
        v = v.windows(2).map(|w| w[1] - w[0]).collect();
    }
    match series.timestamps() {
        Some(ts) => TimeSeries::with_timestamps(v, ts[order..].to_vec()),
        None => TimeSeries::new(v),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfResult {
    pub lags: Vec<usize>,
    pub rho: Vec<f64>,
    pub n: usize,
    /// `1.96 / sqrt(n)`
    pub confidence_limit: f64,
}

/// Sample autocorrelations at lags `1..=max_lag`.
pub fn acf(values: &[f64], max_lag: usize) -> Result<AcfResult> {
    let n = values.len();
    if max_lag == 0 || 2 * max_lag >= n {
        return Err(Error::Domain(format!("lag {max_lag} needs 1 <= lag < n/2 (n = {n})")));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom <= 0.0 || denom <= 1e-28 * values.iter().map(|v| v * v).sum::<f64>() {
        return Err(Error::ConstantSeries);
    }
    let rho = (1..=max_lag)
        .map(|k| dev[k..].iter().zip(&dev).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect();
    Ok(AcfResult {
        lags: (1..=max_lag).collect(),
        rho,
        n,
        confidence_limit: 1.96 / (n as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LjungBoxResult {
    pub lag: usize,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(0.5 * df, 0.5 * x).clamp(0.0, 1.0)
    }
}

/// `Q = n (n + 2) sum_k rho_k^2 / (n - k)` against chi-square with `h - fitted_params` df.
pub fn ljung_box(values: &[f64], h: usize, fitted_params: usize) -> Result<LjungBoxResult> {
    if fitted_params >= h {
        return Err(Error::Domain(format!("fitted parameters ({fitted_params}) must be fewer than the lag ({h})")));
    }
    let a = acf(values, h)?;
    let n = a.n as f64;
    let statistic = n * (n + 2.0) * a.rho.iter().enumerate().map(|(i, r)| r * r / (n - (i + 1) as f64)).sum::<f64>();
    let df = h - fitted_params;
    Ok(LjungBoxResult {
        lag: h,
        statistic,
        df,
        p_value: chi_square_sf(statistic, df as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub rmse: f64,
    pub mae: f64,
}

pub fn error_metrics(truth: &[f64], estimate: &[f64]) -> Result<ErrorMetrics> {
    if truth.len() != estimate.len() || truth.is_empty() {
        return Err(Error::Domain(format!(
            "paths must be non-empty and of equal length ({} vs {})",
            truth.len(),
            estimate.len()
        )));
    }
    let n = truth.len() as f64;
    let (sq, abs) = truth
        .iter()
        .zip(estimate)
        .fold((0.0, 0.0), |(s, a), (t, e)| (s + (e - t) * (e - t), a + (e - t).abs()));
    Ok(ErrorMetrics {
        rmse: (sq / n).sqrt(),
        mae: abs / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn difference_examples() {
        let s = TimeSeries::new(vec![1.0, 3.0, 6.0]).unwrap();
        assert_eq!(difference(&s, 1).unwrap().values(), &[2.0, 3.0]);
        assert_eq!(difference(&s, 2).unwrap().values(), &[1.0]);
        assert!(difference(&s, 3).is_err());
        let c = TimeSeries::new(vec![4.2; 10]).unwrap();
        assert!(difference(&c, 1).unwrap().values().iter().all(|v| *v == 0.0));
        let dated = TimeSeries::with_timestamps(vec![1.0, 2.0, 4.0], vec!["a".into(), "b".into(), "c".into()]).unwrap();
        assert_eq!(difference(&dated, 1).unwrap().timestamps().unwrap(), &["b".to_string(), "c".to_string()]);
    }

    #[test]
    fn acf_alternating_example() {
        let a = acf(&[1.0, -1.0, 1.0, -1.0], 1).unwrap();
        assert!((a.rho[0] + 0.75).abs() < 1e-15);
        assert!(matches!(acf(&[2.0; 10], 2), Err(Error::ConstantSeries)));
        assert!(acf(&[1.0, 2.0, 3.0, 4.0], 2).is_err());
    }

    #[test]
    fn ljung_box_zero_statistic() {
        // rho_1 = 0 exactly for this series.
        let r = ljung_box(&[1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0], 1, 0);
        let lb = r.unwrap();
        assert!((lb.statistic).abs() < 1e-12);
        assert!((lb.p_value - 1.0).abs() < 1e-12);
        assert!(ljung_box(&[1.0, 2.0, 0.0, 5.0, 3.0, 1.0], 2, 2).is_err());
    }

    #[test]
    fn metrics_examples() {
        let m = error_metrics(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((m.rmse - 12.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.mae, 3.5);
        assert_eq!(error_metrics(&[1.0], &[1.0]).unwrap(), ErrorMetrics { rmse: 0.0, mae: 0.0 });
        assert!(error_metrics(&[1.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50)) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let m = error_metrics(&a, &b).unwrap();
            prop_assert!(m.rmse >= m.mae * (1.0 - 1e-12));
        }

        #[test]
        fn acf_is_reversal_symmetric(v in prop::collection::vec(-10f64..10.0, 12..60)) {
            let rev: Vec<f64> = v.iter().rev().copied().collect();
            if let (Ok(a), Ok(b)) = (acf(&v, 5), acf(&rev, 5)) {
                for (x, y) in a.rho.iter().zip(&b.rho) {
                    prop_assert!((x - y).abs() < 1e-9);
                    prop_assert!(x.abs() <= 1.0 + 1e-12);
                }
            }
        }

        #[test]
        fn difference_inverts_cumulative_sum(v in prop::collection::vec(-100f64..100.0, 2..40)) {
            let cum: Vec<f64> = v.iter().scan(0.0, |s, x| { *s += x; Some(*s) }).collect();
            let d = difference(&TimeSeries::new(cum).unwrap(), 1).unwrap();
            for (a, b) in d.values().iter().zip(&v[1..]) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()) + 1e-9);
            }
        }

        #[test]
        fn p_value_decreases_in_q(df in 1usize..60, a in 0f64..200.0, b in 0f64..200.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(chi_square_sf(hi, df as f64) <= chi_square_sf(lo, df as f64));
        }
    }
}
