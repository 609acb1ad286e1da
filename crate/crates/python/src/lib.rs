//! Python bindings: models, simulation, the three threshold estimators,
//! the residual bootstrap, residual diagnostics and the simulation studies.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tvsetar::bootstrap::{bootstrap_model, PARAMETER_NAMES};
use tvsetar::estimation::{self as est, SearchSettings, SelectionMode};
use tvsetar::studies::{self, Study};
use tvsetar::wavelets::{self as wl, WaveletFamily};
use tvsetar::{diagnostics, Error, RegimeCoefficients, ThresholdSpec, TimeSeries};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::FitFailed(_) | Error::DegenerateRegime { .. } | Error::BootstrapUnstable { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn family(name: &str) -> PyResult<WaveletFamily> {
    match name.to_ascii_lowercase().as_str() {
        "haar" => Ok(WaveletFamily::Haar),
        "d" | "daubechies" => Ok(WaveletFamily::DaubechiesExtremalPhase),
        "la" | "least_asymmetric" => Ok(WaveletFamily::DaubechiesLeastAsymmetric),
        other => Err(PyValueError::new_err(format!("unknown wavelet family '{other}'; use haar, d or la"))),
    }
}

fn series(values: Vec<f64>) -> PyResult<TimeSeries> {
    TimeSeries::new(values).map_err(to_py)
}

fn settings(seed: u64) -> SearchSettings {
    SearchSettings::default().with_seed(seed)
}

/// Daubechies-family wavelet basis evaluated by the cascade on dyadic points.
#[pyclass(name = "WaveletBasis", module = "tvsetar_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWaveletBasis {
    inner: wl::WaveletBasis,
}

#[pymethods]
impl PyWaveletBasis {
    #[new]
    #[pyo3(signature = (family, vanishing_moments=1))]
    fn new(family: &str, vanishing_moments: usize) -> PyResult<Self> {
        let f = self::family(family)?;
        let inner = if f == WaveletFamily::Haar {
            wl::WaveletBasis::haar()
        } else {
            wl::WaveletBasis::new(f, vanishing_moments).map_err(to_py)?
        };
        Ok(PyWaveletBasis { inner })
    }

    fn father(&self, t: f64) -> f64 {
        self.inner.father(t)
    }

    fn mother(&self, t: f64) -> f64 {
        self.inner.mother(t)
    }

    #[getter]
    fn low_pass(&self) -> Vec<f64> {
        self.inner.filter().low_pass.clone()
    }

    /// Evaluates the truncated series `(c00, d00, d10, ...)` at `u` in [0, 1).
    fn series(&self, theta: Vec<f64>, u: f64) -> PyResult<f64> {
        let level = theta.len().checked_ilog2().filter(|j| 1usize << j == theta.len()).ok_or_else(|| PyValueError::new_err("theta length must be a power of two"))?;
        let c = wl::WaveletCoefficients::from_theta(level as usize, &theta).map_err(to_py)?;
        wl::eval_threshold_series(&self.inner, &c, u).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let s = self.inner.spec();
        format!("WaveletBasis({:?}, {})", s.family, s.vanishing_moments)
    }
}

/// Two-regime SETAR(1) model with a time-varying threshold.
#[pyclass(name = "SetarModel", module = "tvsetar_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySetarModel {
    inner: tvsetar::SetarModel,
}

fn coeffs(phi: [f64; 4]) -> RegimeCoefficients {
    RegimeCoefficients::new(phi[0], phi[1], phi[2], phi[3])
}

#[pymethods]
impl PySetarModel {
    #[staticmethod]
    fn constant(phi: [f64; 4], gamma: f64, sigma2: f64) -> Self {
        PySetarModel {
            inner: tvsetar::SetarModel::new(coeffs(phi), ThresholdSpec::Constant { gamma }, sigma2),
        }
    }

    /// `gamma(u) = g0 + g1 sin(2 pi k u) + g2 cos(2 pi k u)`
    #[staticmethod]
    fn fourier(phi: [f64; 4], gamma: [f64; 3], k: u32, sigma2: f64) -> Self {
        let threshold = ThresholdSpec::Fourier {
            gamma0: gamma[0],
            gamma1: gamma[1],
            gamma2: gamma[2],
            k,
        };
        PySetarModel {
            inner: tvsetar::SetarModel::new(coeffs(phi), threshold, sigma2),
        }
    }

    #[staticmethod]
    fn wavelet(phi: [f64; 4], basis: &PyWaveletBasis, theta: Vec<f64>, sigma2: f64) -> PyResult<Self> {
        let level = theta.len().checked_ilog2().filter(|j| 1usize << j == theta.len()).ok_or_else(|| PyValueError::new_err("theta length must be a power of two"))?;
        let c = wl::WaveletCoefficients::from_theta(level as usize, &theta).map_err(to_py)?;
        let threshold = ThresholdSpec::Wavelet {
            basis: basis.inner.clone(),
            coeffs: c,
        };
        Ok(PySetarModel {
            inner: tvsetar::SetarModel::new(coeffs(phi), threshold, sigma2),
        })
    }

    /// A simulation study design: "sim1" or "sim2".
    #[staticmethod]
    fn study(name: &str) -> PyResult<Self> {
        Ok(PySetarModel { inner: study(name)?.model() })
    }

    #[getter]
    fn phi(&self) -> [f64; 4] {
        self.inner.coeffs.to_array()
    }

    #[getter]
    fn sigma2(&self) -> f64 {
        self.inner.sigma2
    }

    fn is_ergodic(&self) -> bool {
        self.inner.coeffs.is_ergodic()
    }

    fn threshold_path(&self, length: usize) -> Vec<f64> {
        self.inner.threshold.path(length)
    }

    #[pyo3(signature = (length, y0=0.0, seed=0))]
    fn simulate(&self, py: Python<'_>, length: usize, y0: f64, seed: u64) -> PyResult<Vec<f64>> {
        let model = self.inner.clone();
        py.detach(|| tvsetar::simulate(&model, length, y0, seed))
            .map(TimeSeries::into_values)
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("SetarModel(phi={:?}, sigma2={})", self.inner.coeffs.to_array(), self.inner.sigma2)
    }
}

fn study(name: &str) -> PyResult<Study> {
    match name {
        "sim1" => Ok(Study::Sim1),
        "sim2" => Ok(Study::Sim2),
        other => Err(PyValueError::new_err(format!("unknown study '{other}'; use sim1 or sim2"))),
    }
}

/// Outcome of a threshold fit.
#[pyclass(name = "FitResult", module = "tvsetar_py", frozen)]
struct PyFitResult {
    inner: est::FitResult,
}

#[pymethods]
impl PyFitResult {
    /// `(phi0_low, phi1_low, phi0_high, phi1_high, sigma2)`
    #[getter]
    fn estimates(&self) -> [f64; 5] {
        self.inner.estimates()
    }

    #[getter]
    fn family(&self) -> String {
        self.inner.family.label()
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.theta.clone()
    }

    #[getter]
    fn ssr(&self) -> f64 {
        self.inner.ssr
    }

    #[getter]
    fn sigma2_hat(&self) -> f64 {
        self.inner.sigma2_hat
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    #[getter]
    fn threshold_path(&self) -> Vec<f64> {
        self.inner.threshold_path.clone()
    }

    #[getter]
    fn regime_counts(&self) -> (usize, usize) {
        self.inner.regime_counts
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    /// Selected index (level or frequency) when candidates were compared.
    #[getter]
    fn selected(&self) -> Option<usize> {
        self.inner.selection.as_ref().map(|s| s.chosen)
    }

    fn __repr__(&self) -> String {
        format!("FitResult({}, estimates={:?}, ssr={})", self.inner.family.label(), self.inner.estimates(), self.inner.ssr)
    }
}

#[pyfunction]
fn fit_constant(py: Python<'_>, values: Vec<f64>) -> PyResult<PyFitResult> {
    let s = series(values)?;
    let inner = py.detach(|| est::fit_constant(&s)).map_err(to_py)?;
    Ok(PyFitResult { inner })
}

#[pyfunction]
#[pyo3(signature = (values, k_candidates=vec![1, 2, 3, 4, 5], seed=0))]
fn fit_fourier(py: Python<'_>, values: Vec<f64>, k_candidates: Vec<u32>, seed: u64) -> PyResult<PyFitResult> {
    let s = series(values)?;
    let inner = py.detach(|| est::fit_fourier(&s, &k_candidates, &settings(seed))).map_err(to_py)?;
    Ok(PyFitResult { inner })
}

/// Fits at one level, or selects among several by residual RMSE, or by
/// threshold RMSE against `truth` when given.
#[pyfunction]
#[pyo3(signature = (values, basis, levels, seed=0, truth=None))]
fn fit_wavelet(py: Python<'_>, values: Vec<f64>, basis: &PyWaveletBasis, levels: Vec<usize>, seed: u64, truth: Option<Vec<f64>>) -> PyResult<PyFitResult> {
    let s = series(values)?;
    let b = basis.inner.clone();
    let inner = py
        .detach(|| match (&levels[..], truth) {
            ([level], None) => est::fit_wavelet(&s, &b, *level, &settings(seed)),
            (_, truth) => {
                let mode = truth.map_or(SelectionMode::InSample, SelectionMode::VsTruth);
                est::select_resolution(&s, &b, &levels, &mode, &settings(seed)).map(|(_, f)| f)
            }
        })
        .map_err(to_py)?;
    Ok(PyFitResult { inner })
}

/// Residual bootstrap: percentile intervals and the sup-t threshold band.
#[pyfunction]
#[pyo3(signature = (values, fit, b=200, alpha=0.95, seed=0))]
fn bootstrap<'py>(py: Python<'py>, values: Vec<f64>, fit: &PyFitResult, b: usize, alpha: f64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let s = series(values)?;
    let r = py.detach(|| bootstrap_model(&s, &fit.inner, b, alpha, seed)).map_err(to_py)?;
    let out = PyDict::new(py);
    let intervals = PyDict::new(py);
    for (name, iv) in PARAMETER_NAMES.iter().zip(&r.intervals) {
        intervals.set_item(*name, (iv.lower, iv.upper))?;
    }
    out.set_item("intervals", intervals)?;
    out.set_item("band_lower", r.band.lower)?;
    out.set_item("band_upper", r.band.upper)?;
    out.set_item("c_crit", r.band.c_crit)?;
    out.set_item("dropped", r.dropped)?;
    Ok(out)
}

#[pyfunction]
fn acf(values: Vec<f64>, max_lag: usize) -> PyResult<Vec<f64>> {
    diagnostics::acf(&values, max_lag).map(|a| a.rho).map_err(to_py)
}

/// Returns `(Q, df, p_value)`.
#[pyfunction]
#[pyo3(signature = (values, lag, fitted_params=0))]
fn ljung_box(values: Vec<f64>, lag: usize, fitted_params: usize) -> PyResult<(f64, usize, f64)> {
    let r = diagnostics::ljung_box(&values, lag, fitted_params).map_err(to_py)?;
    Ok((r.statistic, r.df, r.p_value))
}

/// Runs a simulation study; returns rows of `(parameter, true, estimate, rmse)`
/// and the selected levels.
#[pyfunction]
#[pyo3(signature = (name, reps=100, seed=0, length=2048))]
fn replicate<'py>(py: Python<'py>, name: &str, reps: usize, seed: u64, length: usize) -> PyResult<Bound<'py, PyDict>> {
    let st = study(name)?;
    let r = py
        .detach(|| studies::replicate_with_len(st, reps, length, seed, &SearchSettings::default()))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    let rows: Vec<(String, f64, f64, f64)> = r.rows.iter().map(|row| (row.parameter.clone(), row.truth, row.estimate, row.rmse)).collect();
    out.set_item("rows", rows)?;
    out.set_item("selected_levels", r.selected_levels.clone())?;
    out.set_item("modal_level", r.modal_level())?;
    Ok(out)
}

#[pymodule]
fn tvsetar_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWaveletBasis>()?;
    m.add_class::<PySetarModel>()?;
    m.add_class::<PyFitResult>()?;
    m.add_function(wrap_pyfunction!(fit_constant, m)?)?;
    m.add_function(wrap_pyfunction!(fit_fourier, m)?)?;
    m.add_function(wrap_pyfunction!(fit_wavelet, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap, m)?)?;
    m.add_function(wrap_pyfunction!(acf, m)?)?;
    m.add_function(wrap_pyfunction!(ljung_box, m)?)?;
    m.add_function(wrap_pyfunction!(replicate, m)?)?;
    Ok(())
}
