use std::path::Path;

use tvsetar::bootstrap::{bootstrap_model, coverage_experiment_with, PARAMETER_NAMES};
use tvsetar::diagnostics::{acf, difference, ljung_box};
use tvsetar::estimation::{fit_constant, fit_fourier, fit_wavelet, select_resolution, FitResult, SelectionMode};
use tvsetar::studies::{replicate_with_len, Study};
use tvsetar::{simulate_with, SimulationOptions, TimeSeries};

use crate::bundle::{acf_table, band_table, read_document, BootstrapSummary, Bundle, Diagnostics, InputSummary, NamedInterval, ResultDocument, SimulationSummary, Table};
use crate::config::{Command, FamilyChoice, RunConfig, StudyId};
use crate::CliError;

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fit => "fit",
            Command::Bootstrap => "bootstrap",
            Command::Replicate => "replicate",
        }
    }
}

/// Validates, runs on a pool of `config.threads` workers and returns the
/// bundle without writing it.
pub fn execute(command: Command, config: &RunConfig) -> Result<Bundle, CliError> {
    config.validate(command)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::config("threads", e.to_string()))?;
    pool.install(|| match command {
        Command::Simulate => cmd_simulate(config),
        Command::Fit => cmd_fit(config),
        Command::Bootstrap => cmd_bootstrap(config),
        Command::Replicate => cmd_replicate(config),
    })
}

/// [`execute`], then writes the bundle to `config.out`.
pub fn run(command: Command, config: &RunConfig) -> Result<Bundle, CliError> {
    let bundle = execute(command, config)?;
    bundle.write(&config.out)?;
    Ok(bundle)
}

pub fn cmd_simulate(config: &RunConfig) -> Result<Bundle, CliError> {
    let m = &config.model;
    let model = m.resolve();
    let options = SimulationOptions { burn_in: m.burn_in };
    let series = simulate_with(&model, m.len, m.y0, config.seed, &options)?;
    let path = model.threshold.path(m.len);

    let mut doc = ResultDocument::new(Command::Simulate.name(), config);
    doc.simulation = Some(SimulationSummary {
        model,
        len: m.len,
        y0: m.y0,
        burn_in: m.burn_in,
    });
    let mut bundle = Bundle::new(doc);
    let mut table = Table::new("series.csv", &["t", "value", "threshold"]);
    for (t, (y, g)) in series.values().iter().zip(&path).enumerate() {
        table.push(vec![t as f64, *y, *g]);
    }
    bundle.add(table);
    Ok(bundle)
}

/// Reads and differences the configured input.
pub fn load_series(config: &RunConfig) -> Result<(TimeSeries, InputSummary), CliError> {
    let path = config.data.input.as_deref().ok_or_else(|| CliError::config("data.input", "an input file is required"))?;
    let raw = crate::ingest::read_series(path, &config.data)?;
    let series = if config.data.difference > 0 {
        difference(&raw, config.data.difference).map_err(|e| CliError::config("data.difference", e.to_string()))?
    } else {
        raw.clone()
    };
    let summary = InputSummary {
        path: path.display().to_string(),
        column: config.data.column.clone(),
        rows: raw.len(),
        difference: config.data.difference,
        used: series.len(),
    };
    Ok((series, summary))
}

/// The estimator selected by `config.fit`.
pub fn fit_series(series: &TimeSeries, config: &RunConfig) -> Result<FitResult, CliError> {
    let f = &config.fit;
    let settings = config.search();
    let fit = match f.family {
        FamilyChoice::Constant => fit_constant(series)?,
        FamilyChoice::Fourier => fit_fourier(series, &f.fourier_k, &settings)?,
        _ => {
            let basis = f.basis()?.expect("wavelet family");
            if let [level] = f.resolution[..] {
                fit_wavelet(series, &basis, level, &settings)?
            } else {
                select_resolution(series, &basis, &f.resolution, &SelectionMode::InSample, &settings)?.1
            }
        }
    };
    Ok(fit)
}

/// ACF and Ljung-Box of the residuals at the configured lags that the
/// residual count allows.
pub fn residual_diagnostics(residuals: &[f64], config: &RunConfig) -> Result<Diagnostics, CliError> {
    let d = &config.diagnostics;
    let n = residuals.len();
    let max_lag = d.max_lag.min(n.saturating_sub(1) / 2);
    let acf = acf(residuals, max_lag)?;
    let ljung_box = d
        .ljung_box_lags
        .iter()
        .filter(|&&h| 2 * h < n)
        .map(|&h| ljung_box(residuals, h, d.fitted_params))
        .collect::<Result<_, _>>()?;
    Ok(Diagnostics { acf, ljung_box })
}

fn fit_tables(bundle: &mut Bundle, series: &TimeSeries, fit: &FitResult) {
    // high_regime is 1 or 0 for t >= 1 and -1 at t = 0, which has no regime.
    let mut table = Table::new("series.csv", &["t", "value", "threshold", "high_regime"]);
    let y = series.values();
    for t in 0..y.len() {
        let high = if t == 0 { -1.0 } else { f64::from(u8::from(y[t - 1] > fit.threshold_path[t])) };
        table.push(vec![t as f64, y[t], fit.threshold_path[t], high]);
    }
    if let Some(ts) = series.timestamps() {
        table = table.with_label("date", ts.to_vec());
    }
    bundle.add(table);
    let mut res = Table::new("residuals.csv", &["t", "residual"]);
    for (i, e) in fit.residuals.iter().enumerate() {
        res.push(vec![(i + 1) as f64, *e]);
    }
    bundle.add(res);
}

pub fn cmd_fit(config: &RunConfig) -> Result<Bundle, CliError> {
    let (series, input) = load_series(config)?;
    let fit = fit_series(&series, config)?;
    let diagnostics = residual_diagnostics(&fit.residuals, config)?;

    let mut doc = ResultDocument::new(Command::Fit.name(), config);
    doc.input = Some(input);
    let acf = acf_table(&diagnostics.acf);
    doc.diagnostics = Some(diagnostics);
    let mut bundle = Bundle::new(doc);
    fit_tables(&mut bundle, &series, &fit);
    bundle.add(acf);
    bundle.document.fit = Some(fit);
    Ok(bundle)
}

fn prior_fit(path: &Path) -> Result<FitResult, CliError> {
    let doc_path = if path.is_dir() { path.join(crate::bundle::DOCUMENT) } else { path.to_path_buf() };
    let doc = read_document(&doc_path).map_err(|e| CliError::config("bootstrap.from_bundle", e.to_string()))?;
    doc.fit
        .ok_or_else(|| CliError::config("bootstrap.from_bundle", format!("{} holds no fit", doc_path.display())))
}

pub fn cmd_bootstrap(config: &RunConfig) -> Result<Bundle, CliError> {
    let (series, input) = load_series(config)?;
    let fit = match &config.bootstrap.from_bundle {
        Some(p) => {
            let fit = prior_fit(p)?;
            if fit.len() != series.len() {
                return Err(CliError::config(
                    "bootstrap.from_bundle",
                    format!("bundle fit has {} points but the input has {}", fit.len(), series.len()),
                ));
            }
            fit
        }
        None => fit_series(&series, config)?,
    };
    let b = &config.bootstrap;
    let boot = bootstrap_model(&series, &fit, b.b, b.alpha, config.seed)?;

    let mut doc = ResultDocument::new(Command::Bootstrap.name(), config);
    doc.input = Some(input);
    doc.bootstrap = Some(BootstrapSummary {
        b: boot.b,
        alpha: boot.alpha,
        dropped: boot.dropped,
        intervals: boot
            .intervals
            .iter()
            .zip(PARAMETER_NAMES)
            .map(|(iv, name)| NamedInterval {
                parameter: name.into(),
                interval: *iv,
            })
            .collect(),
        c_crit: boot.band.c_crit,
        band_level: boot.band.level,
        floored: boot.band.floored,
    });
    let mut bundle = Bundle::new(doc);
    fit_tables(&mut bundle, &series, &fit);
    bundle.add(band_table(&boot.band));
    let mut est = Table::new("bootstrap_estimates.csv", &["replicate", "phi0_low", "phi1_low", "phi0_high", "phi1_high", "sigma2"]);
    for (i, e) in boot.estimates.iter().enumerate() {
        let mut row = vec![i as f64];
        row.extend_from_slice(e);
        est.push(row);
    }
    bundle.add(est);
    bundle.document.fit = Some(fit);
    Ok(bundle)
}

pub fn cmd_replicate(config: &RunConfig) -> Result<Bundle, CliError> {
    let r = &config.replicate;
    let mut doc = ResultDocument::new(Command::Replicate.name(), config);
    let settings = config.search();
    let names: Vec<String> = PARAMETER_NAMES.iter().map(|s| s.to_string()).collect();
    let mut tables = Vec::new();
    match r.study {
        StudyId::Sim1 | StudyId::Sim2 => {
            let study = if r.study == StudyId::Sim1 { Study::Sim1 } else { Study::Sim2 };
            let report = replicate_with_len(study, r.reps(), r.len, config.seed, &settings)?;
            let mut t = Table::new("table1.csv", &["truth", "estimate", "rmse"]).with_label("parameter", names);
            for row in &report.rows {
                t.push(vec![row.truth, row.estimate, row.rmse]);
            }
            tables.push(t);
            let mut reps = Table::new("replicates.csv", &["replicate", "level", "threshold_rmse"]);
            for (i, rmse) in report.threshold_rmse.iter().enumerate() {
                let level = report.selected_levels.get(i).copied().unwrap_or(2);
                reps.push(vec![i as f64, level as f64, *rmse]);
            }
            tables.push(reps);
            doc.study = Some(report);
        }
        StudyId::Coverage => {
            let model = config.model.resolve();
            let b = &config.bootstrap;
            let report = coverage_experiment_with(&model, r.len, r.reps(), b.b, b.alpha, config.seed, &settings)?;
            let mut labels = names;
            labels.push("band".into());
            let mut t = Table::new("coverage.csv", &["nominal", "coverage"]).with_label("parameter", labels);
            for c in report.parameter_coverage.iter().chain([&report.band_coverage]) {
                t.push(vec![b.alpha, *c]);
            }
            tables.push(t);
            doc.coverage = Some(report);
        }
    }
    let mut bundle = Bundle::new(doc);
    for t in tables {
        bundle.add(t);
    }
    Ok(bundle)
}
