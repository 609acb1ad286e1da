//! Run configuration: one TOML document per run, every field defaulted.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tvsetar::estimation::SearchSettings;
use tvsetar::studies::Study;
use tvsetar::wavelets::{WaveletBasis, WaveletFamily};
use tvsetar::{RegimeCoefficients, SetarModel, ThresholdSpec};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory.
    pub out: PathBuf,
    /// Worker threads; all cores when absent.
    pub threads: Option<usize>,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub fit: FitConfig,
    pub bootstrap: BootstrapConfig,
    pub replicate: ReplicateConfig,
    pub diagnostics: DiagnosticsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("tvsetar-out"),
            threads: None,
            data: DataConfig::default(),
            model: ModelConfig::default(),
            fit: FitConfig::default(),
            bootstrap: BootstrapConfig::default(),
            replicate: ReplicateConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub input: Option<PathBuf>,
    pub column: String,
    pub date_column: Option<String>,
    pub delimiter: char,
    pub difference: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            input: None,
            column: "value".into(),
            date_column: None,
            delimiter: ',',
            difference: 0,
        }
    }
}

/// Data-generating model for `simulate`. Explicit fields override the preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub preset: Option<Study>,
    /// `[phi0_low, phi1_low, phi0_high, phi1_high]`
    pub phi: Option<[f64; 4]>,
    pub sigma2: Option<f64>,
    pub threshold: Option<ThresholdSpec>,
    pub len: usize,
    pub y0: f64,
    pub burn_in: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            preset: None,
            phi: None,
            sigma2: None,
            threshold: None,
            len: 2048,
            y0: 0.0,
            burn_in: 0,
        }
    }
}

impl ModelConfig {
    pub fn resolve(&self) -> SetarModel {
        let mut model = self.preset.unwrap_or(Study::Sim1).model();
        if let Some([a, b, c, d]) = self.phi {
            model.coeffs = RegimeCoefficients::new(a, b, c, d);
        }
        if let Some(s) = self.sigma2 {
            model.sigma2 = s;
        }
        if let Some(t) = &self.threshold {
            model.threshold = t.clone();
        }
        model
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FamilyChoice {
    Constant,
    Fourier,
    Haar,
    /// Daubechies extremal phase.
    D,
    /// Daubechies least asymmetric.
    La,
}

impl FamilyChoice {
    pub fn wavelet(self) -> Option<WaveletFamily> {
        match self {
            FamilyChoice::Haar => Some(WaveletFamily::Haar),
            FamilyChoice::D => Some(WaveletFamily::DaubechiesExtremalPhase),
            FamilyChoice::La => Some(WaveletFamily::DaubechiesLeastAsymmetric),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub family: FamilyChoice,
    pub vanishing_moments: usize,
    /// Candidate levels; more than one triggers in-sample selection.
    pub resolution: Vec<usize>,
    pub fourier_k: Vec<u32>,
    pub search: SearchSettings,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            family: FamilyChoice::La,
            vanishing_moments: 4,
            resolution: vec![3],
            fourier_k: vec![1, 2, 3, 4, 5],
            search: SearchSettings::default(),
        }
    }
}

impl FitConfig {
    pub fn basis(&self) -> Result<Option<WaveletBasis>, CliError> {
        match self.family.wavelet() {
            None => Ok(None),
            Some(WaveletFamily::Haar) => Ok(Some(WaveletBasis::haar())),
            Some(f) => WaveletBasis::new(f, self.vanishing_moments)
                .map(Some)
                .map_err(|e| CliError::config("fit.vanishing_moments", e.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub b: usize,
    pub alpha: f64,
    /// Reuse the fit stored in a previous `fit` bundle instead of refitting.
    pub from_bundle: Option<PathBuf>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            b: 200,
            alpha: 0.95,
            from_bundle: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StudyId {
    Sim1,
    Sim2,
    Coverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplicateConfig {
    pub study: StudyId,
    /// Replications, or Monte Carlo runs for `coverage`. Defaults to 100 and 200.
    pub reps: Option<usize>,
    pub len: usize,
}

impl Default for ReplicateConfig {
    fn default() -> Self {
        ReplicateConfig {
            study: StudyId::Sim1,
            reps: None,
            len: 2048,
        }
    }
}

impl ReplicateConfig {
    pub fn reps(&self) -> usize {
        self.reps.unwrap_or(match self.study {
            StudyId::Coverage => 200,
            _ => 100,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub max_lag: usize,
    pub ljung_box_lags: Vec<usize>,
    /// Subtracted from the Ljung-Box degrees of freedom.
    pub fitted_params: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            max_lag: 30,
            ljung_box_lags: vec![20, 30],
            fitted_params: 0,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub family: Option<FamilyChoice>,
    pub vanishing_moments: Option<usize>,
    pub resolution: Option<Vec<usize>>,
    pub fourier_k: Option<Vec<u32>>,
    pub bootstrap_b: Option<usize>,
    pub alpha: Option<f64>,
    pub reps: Option<usize>,
    pub difference: Option<usize>,
    pub input: Option<PathBuf>,
    pub study: Option<StudyId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Fit,
    Bootstrap,
    Replicate,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| format!("bytes {}..{}", s.start, s.end)).unwrap_or_else(|| "document".into());
            CliError::config(&field, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config("--config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.family {
            self.fit.family = v;
        }
        if let Some(v) = o.vanishing_moments {
            self.fit.vanishing_moments = v;
        }
        if let Some(v) = &o.resolution {
            self.fit.resolution = v.clone();
        }
        if let Some(v) = &o.fourier_k {
            self.fit.fourier_k = v.clone();
        }
        if let Some(v) = o.bootstrap_b {
            self.bootstrap.b = v;
        }
        if let Some(v) = o.alpha {
            self.bootstrap.alpha = v;
        }
        if let Some(v) = o.reps {
            self.replicate.reps = Some(v);
        }
        if let Some(v) = o.difference {
            self.data.difference = v;
        }
        if let Some(v) = &o.input {
            self.data.input = Some(v.clone());
        }
        if let Some(v) = o.study {
            self.replicate.study = v;
        }
    }

    /// Search settings with the run seed.
    pub fn search(&self) -> SearchSettings {
        self.fit.search.with_seed(self.seed)
    }

    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        if self.threads == Some(0) {
            return Err(CliError::config("threads", "must be at least 1"));
        }
        match command {
            Command::Simulate => self.validate_model(),
            Command::Fit => {
                self.validate_data()?;
                self.validate_fit()?;
                self.validate_diagnostics()
            }
            Command::Bootstrap => {
                self.validate_data()?;
                self.validate_fit()?;
                self.validate_bootstrap()
            }
            Command::Replicate => {
                if self.replicate.reps() == 0 {
                    return Err(CliError::config("replicate.reps", "must be positive"));
                }
                if self.replicate.len < 64 {
                    return Err(CliError::config("replicate.len", "must be at least 64"));
                }
                if self.replicate.study == StudyId::Coverage {
                    self.validate_bootstrap()?;
                }
                Ok(())
            }
        }
    }

    fn validate_model(&self) -> Result<(), CliError> {
        let m = &self.model;
        if m.len < 2 {
            return Err(CliError::config("model.len", "must be at least 2"));
        }
        if !m.y0.is_finite() {
            return Err(CliError::config("model.y0", "must be finite"));
        }
        let model = m.resolve();
        if !(model.sigma2.is_finite() && model.sigma2 >= 0.0) {
            return Err(CliError::config("model.sigma2", "must be finite and non-negative"));
        }
        model.threshold.validate().map_err(|e| CliError::config("model.threshold", e.to_string()))?;
        model.coeffs.check_ergodic().map_err(|e| CliError::config("model.phi", e.to_string()))
    }

    fn validate_data(&self) -> Result<(), CliError> {
        if self.data.input.is_none() {
            return Err(CliError::config("data.input", "an input file is required"));
        }
        if self.data.column.is_empty() {
            return Err(CliError::config("data.column", "must name a column"));
        }
        if !self.data.delimiter.is_ascii() {
            return Err(CliError::config("data.delimiter", "must be a single ASCII character"));
        }
        Ok(())
    }

    fn validate_fit(&self) -> Result<(), CliError> {
        let f = &self.fit;
        match f.family {
            FamilyChoice::Constant => {}
            FamilyChoice::Fourier => {
                if f.fourier_k.is_empty() || f.fourier_k.contains(&0) {
                    return Err(CliError::config("fit.fourier_k", "needs at least one positive k"));
                }
            }
            _ => {
                f.basis()?;
                if f.resolution.is_empty() || f.resolution.iter().any(|&j| j == 0 || j > tvsetar::estimation::MAX_SELECTION_LEVEL) {
                    return Err(CliError::config(
                        "fit.resolution",
                        format!("levels must lie in 1..={}", tvsetar::estimation::MAX_SELECTION_LEVEL),
                    ));
                }
            }
        }
        let s = &f.search;
        let ok = s.generations > 0
            && s.population.is_none_or(|p| p >= 4)
            && s.crossover > 0.0
            && s.crossover <= 1.0
            && s.weight > 0.0
            && s.weight <= 2.0
            && s.tolerance >= 0.0;
        if !ok {
            return Err(CliError::config("fit.search", "settings out of range"));
        }
        Ok(())
    }

    fn validate_bootstrap(&self) -> Result<(), CliError> {
        if self.bootstrap.b < tvsetar::bootstrap::MIN_REPLICATES {
            return Err(CliError::config(
                "bootstrap.b",
                format!("must be at least {}", tvsetar::bootstrap::MIN_REPLICATES),
            ));
        }
        if !(self.bootstrap.alpha > 0.0 && self.bootstrap.alpha < 1.0) {
            return Err(CliError::config("bootstrap.alpha", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn validate_diagnostics(&self) -> Result<(), CliError> {
        let d = &self.diagnostics;
        if d.max_lag == 0 {
            return Err(CliError::config("diagnostics.max_lag", "must be positive"));
        }
        if d.ljung_box_lags.iter().any(|&h| h == 0 || h <= d.fitted_params) {
            return Err(CliError::config("diagnostics.ljung_box_lags", "each lag must exceed fitted_params"));
        }
        Ok(())
    }
}
