use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvsetar::estimation::optim::DeStart;
use tvsetar::estimation::*;
use tvsetar::studies::sim1_model;
use tvsetar::wavelets::{WaveletBasis, WaveletCoefficients};
use tvsetar::*;

/// Gaussian elimination with full pivoting on the 4x4 normal equations.
fn normal_equations_oracle(y: &[f64], gamma: &[f64]) -> [f64; 4] {
    let mut a = [[0.0f64; 5]; 4];
    for t in 1..y.len() {
        let ind = if y[t - 1] <= gamma[t] { 1.0 } else { 0.0 };
        let x = [1.0, y[t - 1], ind, y[t - 1] * ind];
        for i in 0..4 {
            for j in 0..4 {
                a[i][j] += x[i] * x[j];
            }
            a[i][4] += x[i] * y[t];
        }
    }
    let mut col = [0usize, 1, 2, 3];
    for k in 0..4 {
        let (mut pr, mut pc, mut best) = (k, k, 0.0);
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, v) in row.iter().enumerate().take(4).skip(k) {
                if v.abs() > best {
                    best = v.abs();
                    pr = i;
                    pc = j;
                }
            }
        }
        a.swap(k, pr);
        for row in a.iter_mut() {
            row.swap(k, pc);
        }
        col.swap(k, pc);
        for i in k + 1..4 {
            let f = a[i][k] / a[k][k];
            for j in k..5 {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    let mut z = [0.0; 4];
    for k in (0..4).rev() {
        let s: f64 = (k + 1..4).map(|j| a[k][j] * z[j]).sum();
        z[k] = (a[k][4] - s) / a[k][k];
    }
    let mut out = [0.0; 4];
    for k in 0..4 {
        out[col[k]] = z[k];
    }
    out
}

#[test]
fn conditional_ls_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 100 {
        let y: Vec<f64> = (0..64).map(|_| rng.random_range(-2.0..2.0)).collect();
        let gamma: Vec<f64> = (0..64).map(|t| 0.3 * (t as f64 / 10.0).sin() + rng.random_range(-0.2..0.2)).collect();
        let series = TimeSeries::new(y.clone()).unwrap();
        let Ok((beta, _)) = conditional_ls(&series, &gamma) else {
            continue;
        };
        let oracle = normal_equations_oracle(&y, &gamma);
        for (b, o) in beta.to_array().iter().zip(oracle) {
            assert!((b - o).abs() < 1e-10, "{b} vs {o}");
        }
        checked += 1;
    }
}

/// Noiseless piecewise-linear map visiting both regimes, with a Haar
/// representable threshold 0.45 / 0.55 / 0.55 / 0.45 by quarter.
fn noiseless_haar_series(len: usize) -> (TimeSeries, RegimeCoefficients, ThresholdSpec) {
    let coeffs = RegimeCoefficients::new(0.05, 1.8, 1.85, -1.8);
    let d = 0.05 / std::f64::consts::SQRT_2;
    let spec = ThresholdSpec::Wavelet {
        basis: WaveletBasis::haar(),
        coeffs: WaveletCoefficients::new(2, 0.5, vec![0.0, -d, d]).unwrap(),
    };
    let path = spec.path(len);
    let y = recurse(&coeffs, &path, 0.3, &vec![0.0; len - 1]);
    (TimeSeries::new(y).unwrap(), coeffs, spec)
}

#[test]
fn zero_noise_wavelet_fit_recovers_coefficients() {
    let (series, truth, _) = noiseless_haar_series(512);
    let fit = fit_wavelet(&series, &WaveletBasis::haar(), 2, &SearchSettings::default()).unwrap();
    assert!(fit.ssr < 1e-12, "ssr {}", fit.ssr);
    for (e, t) in fit.estimates()[..4].iter().zip(truth.to_array()) {
        assert!((e - t).abs() < 1e-6, "{e} vs {t}");
    }
}

#[test]
fn noiseless_representable_threshold_selects_smallest_level() {
    let (series, _, spec) = noiseless_haar_series(512);
    let truth = spec.path(512);
    let (j, fit) = select_resolution(
        &series,
        &WaveletBasis::haar(),
        &[2, 3],
        &SelectionMode::VsTruth(truth),
        &SearchSettings::default(),
    )
    .unwrap();
    assert_eq!(j, 2, "{:?}", fit.selection);
}

#[test]
fn singleton_candidate_is_returned() {
    let series = simulate(&sim1_model(), 512, 0.0, 4).unwrap();
    let (j, fit) = select_resolution(&series, &WaveletBasis::haar(), &[2], &SelectionMode::InSample, &SearchSettings::default()).unwrap();
    assert_eq!(j, 2);
    assert_eq!(fit.selection.unwrap().entries.len(), 1);
}

#[test]
fn recovery_identities_hold() {
    let series = simulate(&sim1_model(), 1024, 0.0, 9).unwrap();
    let fit = fit_wavelet(&series, &WaveletBasis::haar(), 2, &SearchSettings::default()).unwrap();
    let c = fit.model.coeffs;
    let b = fit.beta;
    assert_eq!(c.phi0_low - c.phi0_high, b.b3);
    assert_eq!(c.phi1_low - c.phi1_high, b.b4);
    let recomputed = fit.residuals.iter().map(|e| e * e).sum::<f64>() / (series.len() - 1) as f64;
    assert!((recomputed - fit.sigma2_hat).abs() < 1e-12);
}

#[test]
fn fits_are_deterministic() {
    let series = simulate(&sim1_model(), 1024, 0.0, 5).unwrap();
    let s = SearchSettings::default().with_seed(17);
    let a = fit_wavelet(&series, &WaveletBasis::haar(), 2, &s).unwrap();
    let b = fit_wavelet(&series, &WaveletBasis::haar(), 2, &s).unwrap();
    assert_eq!(a, b);
}

#[test]
fn optimum_beats_every_final_population_member() {
    let series = simulate(&sim1_model(), 2048, 0.0, 21).unwrap();
    let family = ThresholdFamily::Wavelet {
        basis: WaveletBasis::haar(),
        level: 2,
    };
    let space = SearchSpace::for_series(&series, &family, SearchSettings::default()).unwrap();
    let evaluator = ProfileEvaluator::new(&series, &family);
    let out = profile_search(&evaluator, &space, &DeStart::default());
    let best = profile_objective(&series, &family, &out.theta).unwrap();
    for member in &out.de.population {
        let v = profile_objective(&series, &family, member).unwrap();
        assert!(best <= v + 1e-9 * (1.0 + v.abs()), "{best} > {v}");
    }
}

#[test]
fn forcing_zero_details_reproduces_constant_fit() {
    let series = simulate(&sim1_model(), 1024, 0.0, 2).unwrap();
    let constant = fit_constant(&series).unwrap();
    let gamma = constant.theta[0];
    let haar = ThresholdFamily::Wavelet {
        basis: WaveletBasis::haar(),
        level: 2,
    };
    let nested = profile_objective(&series, &haar, &[gamma, 0.0, 0.0, 0.0]).unwrap();
    assert!((nested - constant.ssr).abs() < 1e-9 * (1.0 + constant.ssr));
    let fourier = profile_objective(&series, &ThresholdFamily::Fourier { k: 2 }, &[gamma, 0.0, 0.0]).unwrap();
    assert!((fourier - constant.ssr).abs() < 1e-9 * (1.0 + constant.ssr));
}

#[test]
fn constant_fit_on_noiseless_data_lands_in_the_true_gap() {
    let coeffs = RegimeCoefficients::new(0.05, 1.8, 1.85, -1.8);
    let spec = ThresholdSpec::Constant { gamma: 0.5 };
    let y = recurse(&coeffs, &spec.path(300), 0.3, &vec![0.0; 299]);
    let series = TimeSeries::new(y.clone()).unwrap();
    let fit = fit_constant(&series).unwrap();
    assert!(fit.ssr < 1e-20);
    let lagged = &y[..y.len() - 1];
    let below = lagged.iter().filter(|v| **v <= 0.5).fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    let above = lagged.iter().filter(|v| **v > 0.5).fold(f64::INFINITY, |a, b| a.min(*b));
    assert!(below <= fit.theta[0] && fit.theta[0] < above);
}

#[test]
fn true_threshold_beats_shifted_level() {
    let model = sim1_model();
    let family = ThresholdFamily::Wavelet {
        basis: WaveletBasis::haar(),
        level: 2,
    };
    let truth = match &model.threshold {
        ThresholdSpec::Wavelet { coeffs, .. } => coeffs.to_theta(),
        _ => unreachable!(),
    };
    let mut shifted = truth.clone();
    shifted[0] += 2.0;
    let wins = (0..100)
        .filter(|seed| {
            let series = simulate(&model, 2048, 0.0, *seed).unwrap();
            profile_objective(&series, &family, &truth).unwrap() <= profile_objective(&series, &family, &shifted).unwrap()
        })
        .count();
    assert!(wins >= 95, "{wins}");
}

#[test]
fn wavelet_fit_nests_the_constant_fit() {
    let model = sim1_model();
    let wins = (0..100)
        .filter(|seed| {
            let series = simulate(&model, 2048, 0.0, *seed).unwrap();
            let c = fit_constant(&series).unwrap();
            let w = fit_wavelet(&series, &WaveletBasis::haar(), 2, &SearchSettings::default().with_seed(*seed)).unwrap();
            c.ssr >= w.ssr
        })
        .count();
    assert!(wins >= 95, "{wins}");
}

#[test]
fn fourier_fit_on_constant_threshold_keeps_harmonics_small() {
    let mut model = sim1_model();
    model.threshold = ThresholdSpec::Constant { gamma: 1.25 };
    let reps = 40;
    let small = (0..reps)
        .filter(|seed| {
            let series = simulate(&model, 1024, 0.0, 500 + seed).unwrap();
            let values = series.values();
            let range = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - values.iter().cloned().fold(f64::INFINITY, f64::min);
            let fit = fit_fourier(&series, &[1], &SearchSettings::default().with_seed(*seed)).unwrap();
            fit.theta[1].abs() / range < 0.1 && fit.theta[2].abs() / range < 0.1
        })
        .count();
    assert!(small as f64 >= 0.9 * reps as f64, "{small}/{reps}");
}

#[test]
fn fourier_selection_reports_every_candidate() {
    let series = simulate(&sim1_model(), 1024, 0.0, 3).unwrap();
    let fit = fit_fourier(&series, &[1, 2, 3], &SearchSettings::default()).unwrap();
    let trace = fit.selection.unwrap();
    assert_eq!(trace.entries.len(), 3);
    let best = trace.entries.iter().map(|e| e.ssr).fold(f64::INFINITY, f64::min);
    assert_eq!(fit.ssr, best);
}
