//! The two simulation designs and a seeded Monte Carlo runner that reports
//! True / Estimate / RMSE per parameter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::PARAMETER_NAMES;
use crate::diagnostics::error_metrics;
use crate::error::{Error, Result};
use crate::estimation::{fit_wavelet, select_resolution, FitResult, SearchSettings, SelectionMode};
use crate::model::{simulate, RegimeCoefficients, SetarModel, ThresholdSpec};
use crate::wavelets::{WaveletBasis, WaveletCoefficients, WaveletFamily};

pub const STUDY_LEN: usize = 2048;

/// Candidate levels searched in the second design.
pub const SIM2_LEVELS: [usize; 4] = [2, 3, 4, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    Sim1,
    Sim2,
}

impl Study {
    pub fn model(self) -> SetarModel {
        match self {
            Study::Sim1 => sim1_model(),
            Study::Sim2 => sim2_model(),
        }
    }

    pub fn truth(self) -> [f64; 5] {
        let m = self.model();
        let c = m.coeffs;
        [c.phi0_low, c.phi1_low, c.phi0_high, c.phi1_high, m.sigma2]
    }
}

/// Haar, `J = 2`, threshold 1.5 on `[1/4, 3/4)` and 1 elsewhere.
pub fn sim1_model() -> SetarModel {
    let d = 0.125 * std::f64::consts::SQRT_2;
    let coeffs = WaveletCoefficients::new(2, 1.25, vec![0.0, -d, d]).expect("fixed coefficients are well formed");
    SetarModel::new(
        RegimeCoefficients::new(0.5, -0.3, 1.0, 0.3),
        ThresholdSpec::Wavelet {
            basis: WaveletBasis::haar(),
            coeffs,
        },
        2.0,
    )
}

/// Parabolic threshold `2u^2 - 2u`.
pub fn sim2_model() -> SetarModel {
    SetarModel::new(
        RegimeCoefficients::new(0.5, 0.3, -1.0, 0.5),
        ThresholdSpec::Polynomial {
            coeffs: vec![0.0, -2.0, 2.0],
        },
        1.0,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub parameter: String,
    pub truth: f64,
    pub estimate: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: Study,
    pub reps: usize,
    pub len: usize,
    pub seed: u64,
    pub rows: Vec<StudyRow>,
    /// Selected level per replicate, in replicate order (second design only).
    pub selected_levels: Vec<usize>,
    /// Threshold-path RMSE against the truth per replicate.
    pub threshold_rmse: Vec<f64>,
}

impl StudyReport {
    pub fn means(&self) -> [f64; 5] {
        std::array::from_fn(|i| self.rows[i].estimate)
    }

    pub fn rmses(&self) -> [f64; 5] {
        std::array::from_fn(|i| self.rows[i].rmse)
    }

    /// Most frequent selected level; ties go to the smaller level.
    pub fn modal_level(&self) -> Option<usize> {
        let mut counts = std::collections::BTreeMap::new();
        for j in &self.selected_levels {
            *counts.entry(*j).or_insert(0usize) += 1;
        }
        counts.into_iter().fold(None, |best: Option<(usize, usize)>, (j, n)| match best {
            Some((_, m)) if m >= n => best,
            _ => Some((j, n)),
        })
        .map(|(j, _)| j)
    }
}

/// One replicate: simulate with seed `seed + r`, fit, return the fit and the
/// chosen level.
fn run_one(study: Study, model: &SetarModel, len: usize, seed: u64, settings: &SearchSettings) -> Result<(FitResult, usize)> {
    let series = simulate(model, len, 0.0, seed)?;
    let settings = settings.with_seed(seed);
    match study {
        Study::Sim1 => Ok((fit_wavelet(&series, &WaveletBasis::haar(), 2, &settings)?, 2)),
        Study::Sim2 => {
            let truth = model.threshold.path(len);
            let basis = WaveletBasis::new(WaveletFamily::DaubechiesLeastAsymmetric, 4)?;
            let (j, fit) = select_resolution(&series, &basis, &SIM2_LEVELS, &SelectionMode::VsTruth(truth), &settings)?;
            Ok((fit, j))
        }
    }
}

pub fn replicate(study: Study, reps: usize, seed: u64, settings: &SearchSettings) -> Result<StudyReport> {
    replicate_with_len(study, reps, STUDY_LEN, seed, settings)
}

pub fn replicate_with_len(study: Study, reps: usize, len: usize, seed: u64, settings: &SearchSettings) -> Result<StudyReport> {
    if reps == 0 {
        return Err(Error::Domain("replication count must be positive".into()));
    }
    let model = study.model();
    let truth_path = model.threshold.path(len);
    let runs: Vec<Result<(FitResult, usize)>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| run_one(study, &model, len, seed.wrapping_add(r), settings))
        .collect();
    let runs: Vec<(FitResult, usize)> = runs.into_iter().collect::<Result<_>>()?;

    let truth = study.truth();
    let n = reps as f64;
    let rows = (0..5)
        .map(|i| {
            let est: Vec<f64> = runs.iter().map(|(f, _)| f.estimates()[i]).collect();
            StudyRow {
                parameter: PARAMETER_NAMES[i].to_string(),
                truth: truth[i],
                estimate: est.iter().sum::<f64>() / n,
                rmse: (est.iter().map(|e| (e - truth[i]).powi(2)).sum::<f64>() / n).sqrt(),
            }
        })
        .collect();
    let threshold_rmse = runs
        .iter()
        .map(|(f, _)| error_metrics(&truth_path, &f.threshold_path).map(|m| m.rmse))
        .collect::<Result<_>>()?;
    Ok(StudyReport {
        study,
        reps,
        len,
        seed,
        rows,
        selected_levels: match study {
            Study::Sim1 => Vec::new(),
            Study::Sim2 => runs.iter().map(|(_, j)| *j).collect(),
        },
        threshold_rmse,
    })
}
