//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tvsetar::bootstrap::coverage_experiment;
use tvsetar::diagnostics::{acf, chi_square_sf, error_metrics, ljung_box};
use tvsetar::estimation::{conditional_ls, fit_wavelet, SearchSettings};
use tvsetar::studies::{replicate, sim1_model, Study};
use tvsetar::wavelets::*;
use tvsetar::*;
use tvsetar_cli::config::{FamilyChoice, StudyId};
use tvsetar_cli::{run, Command, RunConfig};

const TABLE1_SIM1_RMSE: [f64; 5] = [0.0429, 0.0448, 0.1285, 0.0483, 0.0642];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fmt5(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("({})", parts.join(", "))
}

fn criterion_1() -> Outcome {
    let report = replicate(Study::Sim1, 100, 0, &SearchSettings::default()).unwrap();
    let truth = Study::Sim1.truth();
    let means = report.means();
    let rmses = report.rmses();
    let means_ok = means.iter().zip(truth).all(|(m, t)| (m - t).abs() <= 0.08);
    let rmse_ok = rmses.iter().zip(TABLE1_SIM1_RMSE).all(|(r, p)| *r <= 2.0 * p && *r >= 0.5 * p);
    outcome(means_ok && rmse_ok, format!("means {} rmse {}", fmt5(&means), fmt5(&rmses)))
}

fn criterion_2() -> Outcome {
    let report = replicate(Study::Sim2, 100, 0, &SearchSettings::default()).unwrap();
    let truth = Study::Sim2.truth();
    let means = report.means();
    let means_ok = means.iter().zip(truth).all(|(m, t)| (m - t).abs() <= 0.10);
    let modal = report.modal_level();
    let counts: Vec<String> = [2, 3, 4, 5]
        .iter()
        .map(|j| format!("J{j}:{}", report.selected_levels.iter().filter(|l| *l == j).count()))
        .collect();
    outcome(
        means_ok && modal == Some(3),
        format!("modal J {modal:?} [{}] means {}", counts.join(" "), fmt5(&means)),
    )
}

fn criterion_3() -> Outcome {
    let report = coverage_experiment(&sim1_model(), 2048, 200, 200, 0.95, 0).unwrap();
    let inside = |c: f64| (0.88..=0.98).contains(&c);
    let pass = report.completed == 200 && report.parameter_coverage.iter().all(|c| inside(*c)) && inside(report.band_coverage);
    outcome(
        pass,
        format!(
            "parameters {} band {:.3} ({} of 200 runs completed)",
            fmt5(&report.parameter_coverage),
            report.band_coverage,
            report.completed
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut worst_filter = 0.0f64;
    for (family, n) in WaveletFamily::supported() {
        let bank = build_filter_bank(family, n).unwrap();
        let s: f64 = bank.low_pass.iter().sum();
        let h: f64 = bank.high_pass.iter().sum();
        let e: f64 = bank.low_pass.iter().map(|v| v * v).sum();
        worst_filter = worst_filter.max((s - std::f64::consts::SQRT_2).abs()).max(h.abs()).max((e - 1.0).abs());
    }
    let bases: Vec<WaveletBasis> = WaveletFamily::supported()
        .into_iter()
        .map(|(f, n)| WaveletBasis::new(f, n).unwrap())
        .collect();
    let worst_unity = bases
        .par_iter()
        .map(|b| {
            let (lo, hi) = b.father_support();
            (0..10_000)
                .map(|i| {
                    let t = i as f64 / 10_000.0;
                    let s: f64 = ((lo.floor() as i64 - 1)..=(hi.ceil() as i64 + 1)).map(|k| b.father(t + k as f64)).sum();
                    (s - 1.0).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    // Gram matrix of the level-4 periodic basis (father plus mothers j <= 3).
    let n = 1usize << 14;
    let ortho: Vec<(bool, f64)> = bases
        .par_iter()
        .map(|b| {
            let rows: Vec<Vec<f64>> = (0..n).map(|i| basis_row(b, 4, i as f64 / n as f64)).collect();
            let dim = rows[0].len();
            let mut worst = 0.0f64;
            for p in 0..dim {
                for q in p..dim {
                    let ip = rows.iter().map(|r| r[p] * r[q]).sum::<f64>() / n as f64;
                    worst = worst.max((ip - if p == q { 1.0 } else { 0.0 }).abs());
                }
            }
            (b.is_haar(), worst)
        })
        .collect();
    let haar_ortho = ortho.iter().filter(|(h, _)| *h).map(|(_, w)| *w).fold(0.0, f64::max);
    let other_ortho = ortho.iter().filter(|(h, _)| !*h).map(|(_, w)| *w).fold(0.0, f64::max);
    outcome(
        worst_filter < 1e-12 && worst_unity < 1e-6 && haar_ortho < 1e-12 && other_ortho < 1e-4,
        format!(
            "{} bases: filter {worst_filter:.1e}, unity {worst_unity:.1e}, orthonormality haar {haar_ortho:.1e} others {other_ortho:.1e}",
            bases.len()
        ),
    )
}

/// Solves `a x = b` by Gaussian elimination with full pivoting.
fn solve_full_pivot(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    let mut col: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for i in k..n {
            for j in k..n {
                if a[i][j].abs() > best {
                    best = a[i][j].abs();
                    pr = i;
                    pc = j;
                }
            }
        }
        a.swap(k, pr);
        b.swap(k, pr);
        for row in a.iter_mut() {
            row.swap(k, pc);
        }
        col.swap(k, pc);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut z = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * z[j]).sum();
        z[k] = (b[k] - s) / a[k][k];
    }
    let mut x = vec![0.0; n];
    for k in 0..n {
        x[col[k]] = z[k];
    }
    x
}

fn criterion_5() -> Outcome {
    let basis = WaveletBasis::new(WaveletFamily::DaubechiesExtremalPhase, 2).unwrap();
    let h = &basis.filter().low_pass;
    // phi(i) = sum_j sqrt2 h[2i - j] phi(j) on the interior integers 1, 2,
    // with the last equation replaced by phi(1) + phi(2) = 1.
    let m = h.len() - 2;
    let mut a = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let idx = 2 * (i as i64 + 1) - (j as i64 + 1);
            if (0..h.len() as i64).contains(&idx) {
                a[i][j] = std::f64::consts::SQRT_2 * h[idx as usize];
            }
        }
        a[i][i] -= 1.0;
    }
    a[m - 1] = vec![1.0; m];
    let mut rhs = vec![0.0; m];
    rhs[m - 1] = 1.0;
    let oracle = solve_full_pivot(a, rhs);
    let got = [basis.father(1.0), basis.father(2.0)];
    let err = (got[0] - oracle[0]).abs().max((got[1] - oracle[1]).abs());
    outcome(err < 1e-9, format!("phi(1) = {:.12}, phi(2) = {:.12}, error {err:.1e}", got[0], got[1]))
}

fn normal_equations(y: &[f64], gamma: &[f64]) -> Vec<f64> {
    let mut a = vec![vec![0.0; 4]; 4];
    let mut b = vec![0.0; 4];
    for t in 1..y.len() {
        let ind = if y[t - 1] <= gamma[t] { 1.0 } else { 0.0 };
        let x = [1.0, y[t - 1], ind, y[t - 1] * ind];
        for i in 0..4 {
            for j in 0..4 {
                a[i][j] += x[i] * x[j];
            }
            b[i] += x[i] * y[t];
        }
    }
    solve_full_pivot(a, b)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut instances = 0;
    while instances < 100 {
        let y: Vec<f64> = (0..64).map(|_| rng.random_range(-2.0..2.0)).collect();
        let gamma: Vec<f64> = (0..64).map(|_| rng.random_range(-0.5..0.5)).collect();
        let Ok((beta, _)) = conditional_ls(&TimeSeries::new(y.clone()).unwrap(), &gamma) else {
            continue;
        };
        for (b, o) in beta.to_array().iter().zip(normal_equations(&y, &gamma)) {
            worst = worst.max((b - o).abs());
        }
        instances += 1;
    }
    // Noiseless data from a Haar J = 2 threshold.
    let coeffs = RegimeCoefficients::new(0.05, 1.8, 1.85, -1.8);
    let d = 0.05 / std::f64::consts::SQRT_2;
    let spec = ThresholdSpec::Wavelet {
        basis: WaveletBasis::haar(),
        coeffs: WaveletCoefficients::new(2, 0.5, vec![0.0, -d, d]).unwrap(),
    };
    let y = recurse(&coeffs, &spec.path(1024), 0.3, &[0.0; 1023]);
    let fit = fit_wavelet(&TimeSeries::new(y).unwrap(), &WaveletBasis::haar(), 2, &SearchSettings::default()).unwrap();
    let phi_err = fit.estimates()[..4]
        .iter()
        .zip(coeffs.to_array())
        .map(|(e, t)| (e - t).abs())
        .fold(0.0, f64::max);
    outcome(
        worst < 1e-10 && phi_err < 1e-6 && fit.ssr < 1e-12,
        format!("oracle gap {worst:.1e} over 100 instances; noiseless phi error {phi_err:.1e}, ssr {:.1e}", fit.ssr),
    )
}

fn criterion_7() -> Outcome {
    let n = 2048;
    let step: Vec<f64> = (0..n)
        .map(|t| if (0.25..0.75).contains(&(t as f64 / n as f64)) { 1.5 } else { 1.0 })
        .collect();
    let haar = WaveletBasis::haar();
    let c = project_function(&haar, 2, &step).unwrap();
    let sup = (0..n)
        .filter(|t| t % (n / 4) != 0)
        .map(|t| (eval_threshold_series(&haar, &c, t as f64 / n as f64).unwrap() - step[t]).abs())
        .fold(0.0, f64::max);
    outcome(sup < 1e-12, format!("c00 = {}, d = {:?}, sup error {sup:.1e}", c.c00(), c.details()))
}

/// Chi-square upper tail by composite Simpson integration of the density.
fn chi_square_sf_oracle(x: f64, df: f64) -> f64 {
    let k = df / 2.0;
    let ln_gamma_k = {
        // Stirling series, adequate for k >= 5.
        (k - 0.5) * k.ln() - k + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * k) - 1.0 / (360.0 * k.powi(3))
    };
    let pdf = |t: f64| if t <= 0.0 { 0.0 } else { ((k - 1.0) * t.ln() - t / 2.0 - k * 2f64.ln() - ln_gamma_k).exp() };
    let steps = 20_000;
    let h = x / steps as f64;
    let mut s = pdf(0.0) + pdf(x);
    for i in 1..steps {
        s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - s * h / 3.0
}

fn criterion_8() -> Outcome {
    let rho1 = acf(&[1.0, -1.0, 1.0, -1.0], 1).unwrap().rho[0];
    let lb = ljung_box(&[1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0], 1, 0).unwrap();
    let tail_gap = [(20.0, 20.0), (10.0, 12.0), (35.0, 30.0), (25.0, 20.0)]
        .iter()
        .map(|&(x, df)| (chi_square_sf(x, df) - chi_square_sf_oracle(x, df)).abs())
        .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let violations = (0..1000)
        .filter(|_| {
            let n = rng.random_range(1..50);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let m = error_metrics(&a, &b).unwrap();
            m.rmse < m.mae
        })
        .count();
    outcome(
        (rho1 + 0.75).abs() < 1e-12 && lb.statistic == 0.0 && lb.p_value == 1.0 && tail_gap < 0.02 && violations == 0,
        format!(
            "rho1 = {rho1}, Q = {} p = {}, chi-square tail gap {tail_gap:.1e}, rmse < mae in {violations} of 1000",
            lb.statistic, lb.p_value
        ),
    )
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn criterion_9() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mut sim = RunConfig::default();
    sim.seed = 42;
    sim.model.len = 1024;
    sim.out = root.path().join("simulate");
    let input = sim.out.join("series.csv");

    let mut fit = RunConfig::default();
    fit.seed = 42;
    fit.data.input = Some(input.clone());
    fit.fit.family = FamilyChoice::La;
    fit.fit.resolution = vec![2, 3];
    fit.out = root.path().join("fit");

    let mut boot = fit.clone();
    boot.fit.family = FamilyChoice::Haar;
    boot.fit.resolution = vec![2];
    boot.bootstrap.b = 50;
    boot.out = root.path().join("bootstrap");

    let mut rep = RunConfig::default();
    rep.seed = 42;
    rep.replicate.reps = Some(4);
    rep.replicate.len = 512;
    rep.out = root.path().join("replicate");

    let mut cov = rep.clone();
    cov.replicate.study = StudyId::Coverage;
    cov.replicate.reps = Some(2);
    cov.bootstrap.b = 50;
    cov.out = root.path().join("coverage");

    let runs = [
        (Command::Simulate, sim),
        (Command::Fit, fit),
        (Command::Bootstrap, boot),
        (Command::Replicate, rep),
        (Command::Replicate, cov),
    ];
    let mut identical = 0;
    for (cmd, cfg) in &runs {
        run(*cmd, cfg).unwrap();
        let first = snapshot(&cfg.out);
        run(*cmd, cfg).unwrap();
        if snapshot(&cfg.out) == first {
            identical += 1;
        }
    }
    outcome(
        identical == runs.len(),
        format!("{identical} of {} command runs byte-identical on re-run", runs.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("simulation study 1 replication", criterion_1),
        ("simulation study 2 replication", criterion_2),
        ("bootstrap coverage", criterion_3),
        ("wavelet identities", criterion_4),
        ("D(2) integer values", criterion_5),
        ("estimator oracle equivalence", criterion_6),
        ("step threshold representability", criterion_7),
        ("diagnostics", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} {:<34} {} ({:.1}s) {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
