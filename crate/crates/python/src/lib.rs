//! Python bindings: `import fou`.

use std::path::Path;

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fou_core::asymptotics::{self, ConstantsTable};
use fou_core::estimators;
use fou_core::fbm::{self, FbmSampler};
use fou_core::fou::{self as process, integrated_square};
use fou_core::harness::{self, ExperimentConfig};
use fou_core::{FbmMethod, FouError, FouParams, HurstParameter, PathLabel, SamplePath, Scheme, TimeGrid};

fn to_py(e: FouError) -> PyErr {
    match e {
        FouError::Io { .. } => PyOSError::new_err(e.to_string()),
        e if e.is_numerical() => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn hurst(h: f64) -> PyResult<HurstParameter> {
    HurstParameter::new(h).map_err(to_py)
}

/// Parses a kebab-case enum name such as "euler-langevin".
fn parse_name<T: serde::de::DeserializeOwned>(name: &str, what: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(name.to_owned()))
        .map_err(|_| PyValueError::new_err(format!("unknown {what} {name:?}")))
}

#[pyclass(name = "FouParams", module = "fou", frozen)]
struct PyFouParams {
    inner: FouParams,
}

#[pymethods]
impl PyFouParams {
    #[new]
    fn new(theta: f64, sigma: f64, h: f64) -> PyResult<Self> {
        Ok(PyFouParams { inner: FouParams::from_values(theta, sigma, h).map_err(to_py)? })
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h.value()
    }

    /// σ² θ^{-2H} H Γ(2H).
    fn stationary_second_moment(&self) -> PyResult<f64> {
        process::stationary_second_moment(&self.inner).map_err(to_py)
    }

    /// `(var_hat, var_tilde)` of the limiting normal laws.
    fn clt_variances(&self) -> PyResult<(f64, f64)> {
        asymptotics::clt_variances(&self.inner).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("FouParams(theta={}, sigma={}, h={})", self.inner.theta, self.inner.sigma, self.inner.h)
    }
}

#[pyclass(name = "SamplePath", module = "fou", frozen)]
struct PySamplePath {
    inner: SamplePath,
}

#[pymethods]
impl PySamplePath {
    /// Builds a path on the uniform grid `k t_max / (len(values) - 1)`.
    #[new]
    #[pyo3(signature = (t_max, values, label = "fou", h = None))]
    fn new(t_max: f64, values: Vec<f64>, label: &str, h: Option<f64>) -> PyResult<Self> {
        if values.len() < 2 {
            return Err(PyValueError::new_err("a path needs at least two values"));
        }
        let grid = TimeGrid::new(t_max, values.len() - 1).map_err(to_py)?;
        let label: PathLabel = parse_name(label, "path label")?;
        let mut inner = SamplePath::new(grid, values, label).map_err(to_py)?;
        if let Some(h) = h {
            inner = inner.with_hurst(hurst(h)?);
        }
        Ok(PySamplePath { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (text, h = None))]
    fn from_csv(text: &str, h: Option<f64>) -> PyResult<Self> {
        let mut inner = harness::path_from_csv(text, Path::new("<string>"), PathLabel::Fou).map_err(to_py)?;
        if let Some(h) = h {
            inner = inner.with_hurst(hurst(h)?);
        }
        Ok(PySamplePath { inner })
    }

    fn to_csv(&self) -> String {
        harness::path_to_csv(&self.inner)
    }

    fn times(&self) -> Vec<f64> {
        self.inner.grid().points().collect()
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn t_max(&self) -> f64 {
        self.inner.grid().t_max()
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.inner.grid().n_steps()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.grid().delta()
    }

    #[getter]
    fn label(&self) -> &'static str {
        match self.inner.label() {
            PathLabel::Fbm => "fbm",
            PathLabel::Fou => "fou",
        }
    }

    #[getter]
    fn h(&self) -> Option<f64> {
        self.inner.hurst().map(HurstParameter::value)
    }

    fn integrated_square(&self) -> f64 {
        integrated_square(&self.inner)
    }

    fn subsample(&self, factor: usize) -> PyResult<Self> {
        Ok(PySamplePath { inner: self.inner.subsample(factor).map_err(to_py)? })
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "SamplePath(label={:?}, t_max={}, n_steps={}, h={:?})",
            self.label(),
            self.t_max(),
            self.n_steps(),
            self.h()
        )
    }
}

/// Exact fBm sample on `n_steps` uniform steps of `[0, t_max]`.
#[pyfunction]
#[pyo3(signature = (h, t_max, n_steps, seed, method = "circulant-embedding"))]
fn generate_fbm(py: Python<'_>, h: f64, t_max: f64, n_steps: usize, seed: u64, method: &str) -> PyResult<PySamplePath> {
    let method: FbmMethod = parse_name(method, "fBm method")?;
    let (h, grid) = (hurst(h)?, TimeGrid::new(t_max, n_steps).map_err(to_py)?);
    let inner = py.detach(|| fbm::generate_fbm(grid, h, seed, method)).map_err(to_py)?;
    Ok(PySamplePath { inner })
}

#[pyfunction]
#[pyo3(signature = (params, fbm_path, scheme = "integrating-factor"))]
fn simulate_fou(params: &PyFouParams, fbm_path: &PySamplePath, scheme: &str) -> PyResult<PySamplePath> {
    let scheme: Scheme = parse_name(scheme, "scheme")?;
    let inner = process::simulate_fou(&params.inner, &fbm_path.inner, scheme).map_err(to_py)?;
    Ok(PySamplePath { inner })
}

/// fBm generation followed by the fOU recursion, on a grid of step `delta`.
#[pyfunction]
#[pyo3(signature = (params, t_max, delta, seed, scheme = "integrating-factor", method = "circulant-embedding"))]
fn simulate(
    py: Python<'_>,
    params: &PyFouParams,
    t_max: f64,
    delta: f64,
    seed: u64,
    scheme: &str,
    method: &str,
) -> PyResult<PySamplePath> {
    let scheme: Scheme = parse_name(scheme, "scheme")?;
    let method: FbmMethod = parse_name(method, "fBm method")?;
    let p = params.inner;
    let inner = py
        .detach(|| {
            let grid = TimeGrid::with_step(t_max, delta)?;
            let path = FbmSampler::new(grid, p.h, method)?.sample(seed);
            process::simulate_fou(&p, &path, scheme)
        })
        .map_err(to_py)?;
    Ok(PySamplePath { inner })
}

#[pyfunction]
#[pyo3(signature = (params, s, t, tol = 1e-10))]
fn fou_covariance(params: &PyFouParams, s: f64, t: f64, tol: f64) -> PyResult<f64> {
    process::fou_covariance(&params.inner, s, t, tol).map_err(to_py)
}

#[pyfunction]
fn theta_tilde(path: &PySamplePath, sigma: f64, h: f64) -> PyResult<f64> {
    Ok(estimators::theta_tilde(&path.inner, sigma, hurst(h)?).map_err(to_py)?.estimate)
}

#[pyfunction]
fn theta_hat_oracle(path: &PySamplePath, sigma: f64, h: f64, theta_true: f64) -> PyResult<f64> {
    Ok(estimators::theta_hat_oracle(&path.inner, sigma, hurst(h)?, theta_true).map_err(to_py)?.estimate)
}

#[pyfunction]
fn theta_hat_prime(path: &PySamplePath) -> PyResult<f64> {
    Ok(estimators::theta_hat_prime(&path.inner).map_err(to_py)?.estimate)
}

#[pyfunction]
fn theta_hat_ito(path: &PySamplePath) -> PyResult<f64> {
    Ok(estimators::theta_hat_ito(&path.inner).map_err(to_py)?.estimate)
}

#[pyfunction]
fn f_statistic(path: &PySamplePath, theta_hat: f64, theta_true: f64) -> PyResult<f64> {
    estimators::f_statistic(&path.inner, theta_hat, theta_true).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (theta, h, t_max, tol = 1e-10))]
fn correction_integral(theta: f64, h: f64, t_max: f64, tol: f64) -> PyResult<f64> {
    estimators::correction_integral(theta, hurst(h)?, t_max, tol).map_err(to_py)
}

/// The constants table as a dict; entries outside their domain are None.
#[pyfunction]
#[pyo3(signature = (h, theta = 1.0, sigma = 1.0))]
fn constants<'py>(py: Python<'py>, h: f64, theta: f64, sigma: f64) -> PyResult<Bound<'py, PyDict>> {
    let table = ConstantsTable::compute(h, theta, sigma).map_err(to_py)?;
    let dict = PyDict::new(py);
    for (name, value) in table.rows() {
        dict.set_item(name, value)?;
    }
    Ok(dict)
}

#[pyfunction]
fn sigma_h_squared(h: f64) -> PyResult<f64> {
    asymptotics::sigma_h_squared(h).map_err(to_py)
}

#[pyfunction]
fn delta_h(h: f64) -> PyResult<f64> {
    asymptotics::delta_h(h).map_err(to_py)
}

#[pyfunction]
fn gamma_h(h: f64) -> PyResult<f64> {
    asymptotics::gamma_h(h).map_err(to_py)
}

#[pyfunction]
fn d_h_closed(h: f64) -> PyResult<f64> {
    asymptotics::d_h_closed(h).map_err(to_py)
}

/// `(estimate, std_error)` of the importance-sampled triple integral.
#[pyfunction]
#[pyo3(signature = (h, n_samples = 1_000_000, seed = 0))]
fn d_h_numeric(py: Python<'_>, h: f64, n_samples: u64, seed: u64) -> PyResult<(f64, f64)> {
    let mc = py.detach(|| asymptotics::d_h_numeric(h, n_samples, seed)).map_err(to_py)?;
    Ok((mc.estimate, mc.std_error))
}

#[pyfunction]
#[pyo3(signature = (h, tol = 1e-10))]
fn lemma_a1_value(h: f64, tol: f64) -> PyResult<f64> {
    asymptotics::lemma_a1_value(h, tol).map_err(to_py)
}

#[pyfunction]
fn finite_t_variance_bm(theta: f64, sigma: f64, t_max: f64) -> f64 {
    asymptotics::finite_t_variance_bm(theta, sigma, t_max)
}

/// Runs an experiment from its JSON config and returns the report as JSON.
/// With `out_dir`, `report.json` and `records.csv` are written there too.
#[pyfunction]
#[pyo3(signature = (config_json, out_dir = None))]
fn run_experiment(py: Python<'_>, config_json: &str, out_dir: Option<&str>) -> PyResult<String> {
    let config: ExperimentConfig = harness::parse_config(config_json, Path::new("<string>")).map_err(to_py)?;
    let report = py.detach(|| harness::run_experiment(&config)).map_err(to_py)?;
    if let Some(dir) = out_dir {
        harness::write_report(&report, Path::new(dir)).map_err(to_py)?;
    }
    Ok(serde_json::to_string(&report).expect("report serializes"))
}

#[pymodule]
fn fou(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFouParams>()?;
    m.add_class::<PySamplePath>()?;
    m.add_function(wrap_pyfunction!(generate_fbm, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_fou, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fou_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(theta_tilde, m)?)?;
    m.add_function(wrap_pyfunction!(theta_hat_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(theta_hat_prime, m)?)?;
    m.add_function(wrap_pyfunction!(theta_hat_ito, m)?)?;
    m.add_function(wrap_pyfunction!(f_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(correction_integral, m)?)?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_h_squared, m)?)?;
    m.add_function(wrap_pyfunction!(delta_h, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_h, m)?)?;
    m.add_function(wrap_pyfunction!(d_h_closed, m)?)?;
    m.add_function(wrap_pyfunction!(d_h_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_a1_value, m)?)?;
    m.add_function(wrap_pyfunction!(finite_t_variance_bm, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
