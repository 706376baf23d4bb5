//! Python bindings for the `logcwt` core crate.

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use logcwt::cwt;
use logcwt::decompose::{self as dec, DecompositionConfig};
use logcwt::info::{self, DiscreteDistribution};
use logcwt::kdv;
use logcwt::model::{self, LogisticWave, MultilogisticModel};
use logcwt::reference;
use logcwt::timeseries::{first_difference, TimeSeries};
use logcwt::trend;
use logcwt::wavelet;
use logcwt::{Error, ErrorKind};

fn py_err(e: Error) -> PyErr {
    match (&e, e.kind()) {
        (Error::Io { .. }, _) => PyOSError::new_err(e.to_string()),
        (_, ErrorKind::Numerical) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn series(values: Vec<f64>, start: f64) -> PyResult<TimeSeries> {
    Ok(TimeSeries::new(values).map_err(py_err)?.with_start(start))
}

/// One logistic wave `y_sat / (1 + exp(-(t - b)/a))`.
#[pyclass(name = "Wave", get_all, set_all, from_py_object)]
#[derive(Clone)]
struct PyWave {
    id: String,
    a: f64,
    b: f64,
    y_sat: f64,
    edge: bool,
}

impl PyWave {
    fn core(&self) -> PyResult<LogisticWave> {
        let mut w = LogisticWave::new(self.id.clone(), self.a, self.b, self.y_sat).map_err(py_err)?;
        w.edge = self.edge;
        Ok(w)
    }
}

impl From<&LogisticWave> for PyWave {
    fn from(w: &LogisticWave) -> Self {
        PyWave {
            id: w.id.clone(),
            a: w.a,
            b: w.b,
            y_sat: w.y_sat,
            edge: w.edge,
        }
    }
}

#[pymethods]
impl PyWave {
    #[new]
    #[pyo3(signature = (id, a, b, y_sat, edge = false))]
    fn new(id: String, a: f64, b: f64, y_sat: f64, edge: bool) -> PyResult<Self> {
        LogisticWave::new(id.clone(), a, b, y_sat).map_err(py_err)?;
        Ok(PyWave { id, a, b, y_sat, edge })
    }

    /// Peak of the derivative, `y_sat / (4a)`.
    fn amplitude(&self) -> f64 {
        self.y_sat / (4.0 * self.a)
    }

    fn value(&self, t: f64) -> PyResult<f64> {
        Ok(self.core()?.value(t))
    }

    fn rate(&self, t: f64) -> PyResult<f64> {
        Ok(self.core()?.rate(t))
    }

    fn __repr__(&self) -> String {
        format!("Wave(id={:?}, a={}, b={}, y_sat={})", self.id, self.a, self.b, self.y_sat)
    }
}

/// Drift `d` (plus offset `c`) and a list of waves.
#[pyclass(name = "Model", get_all, set_all, from_py_object)]
#[derive(Clone)]
struct PyModel {
    c: f64,
    d: f64,
    waves: Vec<PyWave>,
}

impl PyModel {
    fn core(&self) -> PyResult<MultilogisticModel> {
        Ok(MultilogisticModel {
            c: self.c,
            d: self.d,
            waves: self.waves.iter().map(PyWave::core).collect::<PyResult<_>>()?,
        })
    }
}

impl From<&MultilogisticModel> for PyModel {
    fn from(m: &MultilogisticModel) -> Self {
        PyModel {
            c: m.c,
            d: m.d,
            waves: m.waves.iter().map(PyWave::from).collect(),
        }
    }
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (d, waves, c = 0.0))]
    fn new(d: f64, waves: Vec<PyWave>, c: f64) -> Self {
        PyModel { c, d, waves }
    }

    /// Cumulative form `c + d·t + Σ logistic`.
    fn value(&self, t: f64) -> PyResult<f64> {
        Ok(model::eval_multilogistic(&self.core()?, t))
    }

    /// Derivative form `d + Σ y_sat/(4a)·sech²((t - b)/(2a))`.
    fn rate(&self, t: f64) -> PyResult<f64> {
        Ok(model::eval_multilogistic_derivative(&self.core()?, t))
    }

    fn to_json(&self) -> PyResult<String> {
        model::WaveTable::from_model(&self.core()?, None)
            .to_json_string()
            .map_err(py_err)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        let m = model::WaveTable::from_json_str(s)
            .and_then(|t| t.model())
            .map_err(py_err)?;
        Ok(PyModel::from(&m))
    }

    fn __repr__(&self) -> String {
        format!("Model(d={}, {} waves)", self.d, self.waves.len())
    }
}

/// CWT values on an `(alpha, beta)` grid, row-major by alpha.
#[pyclass(name = "Scalogram")]
struct PyScalogram {
    inner: cwt::Scalogram,
}

#[pymethods]
impl PyScalogram {
    #[getter]
    fn alphas(&self) -> Vec<f64> {
        self.inner.alphas().to_vec()
    }

    #[getter]
    fn betas(&self) -> Vec<f64> {
        self.inner.betas().to_vec()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.inner.shape().0).map(|i| self.inner.row(i).to_vec()).collect()
    }

    fn median_abs(&self) -> f64 {
        self.inner.median_abs()
    }

    /// Extrema as dicts with `alpha, beta, cwt_value, kind, edge, y_sat`.
    #[pyo3(signature = (min_abs = None))]
    fn extrema<'py>(&self, py: Python<'py>, min_abs: Option<f64>) -> PyResult<Vec<Bound<'py, pyo3::types::PyDict>>> {
        use pyo3::types::PyDict;
        let threshold = min_abs.unwrap_or_else(|| 3.0 * self.inner.median_abs());
        cwt::find_extrema(&self.inner, threshold, cwt::ExclusionRadius::default())
            .iter()
            .map(|e| {
                let d = PyDict::new(py);
                d.set_item("alpha", e.alpha)?;
                d.set_item("beta", e.beta)?;
                d.set_item("cwt_value", e.cwt_value)?;
                d.set_item(
                    "kind",
                    match e.kind {
                        cwt::ExtremumKind::Maximum => "maximum",
                        cwt::ExtremumKind::Minimum => "minimum",
                    },
                )?;
                d.set_item("edge", e.edge)?;
                d.set_item("y_sat", cwt::ysat_from_cwt(e))?;
                Ok(d)
            })
            .collect()
    }
}

#[pyfunction]
fn logistic(t: f64) -> f64 {
    wavelet::logistic(t)
}

/// Normalized second-derivative logistic wavelet.
#[pyfunction]
fn psi2(t: f64) -> f64 {
    wavelet::psi2(t)
}

/// `∫ psi2²` on `[-40, 40]` by the trapezoid rule.
#[pyfunction]
#[pyo3(signature = (step = 1e-3))]
fn psi2_norm_squared(step: f64) -> PyResult<f64> {
    wavelet::l2_norm_squared(wavelet::psi2, wavelet::DEFAULT_SUPPORT, step).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (step = 1e-3))]
fn psi2_admissibility(step: f64) -> PyResult<f64> {
    wavelet::admissibility_check(wavelet::psi2, step, wavelet::DEFAULT_SUPPORT).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (values, start = 1.0))]
fn first_diff(values: Vec<f64>, start: f64) -> PyResult<Vec<f64>> {
    Ok(first_difference(&series(values, start)?).map_err(py_err)?.into_values())
}

/// Scalogram of `signal` (already differenced) over `alphas`; shifts default
/// to the integer sample positions.
#[pyfunction]
#[pyo3(signature = (signal, alphas, betas = None, start = 1.0))]
fn scalogram(signal: Vec<f64>, alphas: Vec<f64>, betas: Option<Vec<f64>>, start: f64) -> PyResult<PyScalogram> {
    let s = series(signal, start)?;
    let betas = betas.unwrap_or_else(|| cwt::default_betas(&s));
    let inner = cwt::scalogram(&s, &alphas, &betas).map_err(py_err)?;
    Ok(PyScalogram { inner })
}

#[pyfunction]
fn alpha_grid(min: f64, max: f64, step: f64) -> PyResult<Vec<f64>> {
    cwt::alpha_grid(min, max, step).map_err(py_err)
}

/// Decomposes a monthly series; returns `(model, r_squared, rmse)`.
#[pyfunction]
#[pyo3(signature = (values, max_waves = 22, stop_r2 = 0.9939, start = 1.0))]
fn decompose(py: Python<'_>, values: Vec<f64>, max_waves: usize, stop_r2: f64, start: f64) -> PyResult<(PyModel, f64, f64)> {
    let s = series(values, start)?;
    let cfg = DecompositionConfig {
        max_waves,
        stop_r2,
        ..Default::default()
    };
    let d = py.detach(|| dec::decompose(&s, &cfg)).map_err(py_err)?;
    Ok((PyModel::from(&d.model), d.fit.r_squared, d.fit.rmse))
}

/// Samples the rate model at `t = 1..=n` with optional Gaussian noise.
#[pyfunction]
#[pyo3(signature = (model, n, noise_sigma = 0.0, seed = 0))]
fn synthesize(model: &PyModel, n: usize, noise_sigma: f64, seed: u64) -> PyResult<Vec<f64>> {
    Ok(model::synthesize(&model.core()?, n, noise_sigma, seed)
        .map_err(py_err)?
        .into_values())
}

/// The published 22-wave table with `d = 13.9`.
#[pyfunction]
fn table1_model() -> PyModel {
    PyModel::from(&reference::table1_model())
}

/// Chains as JSON-compatible dicts.
#[pyfunction]
#[pyo3(signature = (waves, tolerance = trend::DEFAULT_GROUP_TOLERANCE))]
fn auto_group(waves: Vec<PyWave>, tolerance: f64) -> PyResult<String> {
    let ws: Vec<LogisticWave> = waves.iter().map(PyWave::core).collect::<PyResult<_>>()?;
    let chains = trend::auto_group(&ws, tolerance).map_err(py_err)?;
    trend::chains_to_json(&chains).map_err(py_err)
}

/// Joint distribution over 1 to 3 variables.
#[pyclass(name = "Distribution")]
struct PyDistribution {
    inner: DiscreteDistribution,
}

#[pymethods]
impl PyDistribution {
    #[new]
    fn new(outcomes: Vec<Vec<String>>, probs: Vec<f64>) -> PyResult<Self> {
        Ok(PyDistribution {
            inner: DiscreteDistribution::new(outcomes, probs).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(PyDistribution {
            inner: DiscreteDistribution::from_json_str(s).map_err(py_err)?,
        })
    }

    #[getter]
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    /// Entropy in bits of the marginal over 0-based `vars` (default: all).
    #[pyo3(signature = (vars = None))]
    fn entropy(&self, vars: Option<Vec<usize>>) -> PyResult<f64> {
        let vars = vars.unwrap_or_else(|| (0..self.inner.arity()).collect());
        info::shannon_entropy(&self.inner, &vars).map_err(py_err)
    }

    fn mutual_information(&self) -> PyResult<f64> {
        info::mutual_information_2(&self.inner).map_err(py_err)
    }

    fn configurational_information(&self) -> PyResult<f64> {
        info::configurational_information_3(&self.inner).map_err(py_err)
    }

    #[pyo3(signature = (alpha = 1.0))]
    fn redundancy(&self, alpha: f64) -> PyResult<f64> {
        info::mutual_redundancy_scaled(&self.inner, alpha).map_err(py_err)
    }
}

#[pyfunction]
fn redundancy_fraction(h: f64, h_max: f64) -> PyResult<f64> {
    info::redundancy_fraction(h, h_max).map_err(py_err)
}

#[pyfunction]
fn synergy_balance(p: [f64; 3], q: [f64; 3]) -> f64 {
    info::synergy_balance(&info::SynergyVectors { p, q })
}

#[pyfunction]
fn soliton(k: f64, x: f64, t: f64) -> f64 {
    kdv::soliton(k, x, t)
}

/// Max-norm KdV residual of the sampled soliton on `[-half_width, half_width]`.
#[pyfunction]
#[pyo3(signature = (k, h, tau, half_width = 20.0, levels = 5))]
fn soliton_residual(k: f64, h: f64, tau: f64, half_width: f64, levels: usize) -> PyResult<f64> {
    kdv::KdvParams::new(k, 1.0, 0.0).map_err(py_err)?;
    if !(h > 0.0 && tau > 0.0 && half_width > 0.0) {
        return Err(PyValueError::new_err("h, tau and half_width must be positive"));
    }
    let nx = (2.0 * half_width / h).round() as usize + 1;
    let g = kdv::GridFunction::sample(
        kdv::uniform_grid(-half_width, h, nx),
        kdv::uniform_grid(0.0, tau, levels),
        |x, t| kdv::soliton(k, x, t),
    )
    .map_err(py_err)?;
    kdv::kdv_residual(&g).map_err(py_err)
}

#[pymodule]
fn pylogcwt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWave>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyScalogram>()?;
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(logistic, m)?)?;
    m.add_function(wrap_pyfunction!(psi2, m)?)?;
    m.add_function(wrap_pyfunction!(psi2_norm_squared, m)?)?;
    m.add_function(wrap_pyfunction!(psi2_admissibility, m)?)?;
    m.add_function(wrap_pyfunction!(first_diff, m)?)?;
    m.add_function(wrap_pyfunction!(scalogram, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_grid, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(table1_model, m)?)?;
    m.add_function(wrap_pyfunction!(auto_group, m)?)?;
    m.add_function(wrap_pyfunction!(redundancy_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(synergy_balance, m)?)?;
    m.add_function(wrap_pyfunction!(soliton, m)?)?;
    m.add_function(wrap_pyfunction!(soliton_residual, m)?)?;
    Ok(())
}
