//! Python bindings for `qoct`.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use qoct::cli::{build_model, null_report, simulate, Model};
use qoct::config::{parse_json, RunConfig};
use qoct::error::QoctError;
use qoct::extract::{self, DEFAULT_COARSE_STEP, DEFAULT_MAX_WINDING, DEFAULT_PROMINENCE};
use qoct::interferometer::{Interferogram, ReferenceArm};
use qoct::jones::{self, PolarizationMatrix, PolarizationVector};
use qoct::{io, presets};

create_exception!(qoct_py, QoctException, PyException, "Error raised by the qoct engine.");
create_exception!(
    qoct_py,
    DegenerateError,
    QoctException,
    "Extraction has no unique answer."
);

fn to_py(e: QoctError) -> PyErr {
    match e {
        QoctError::Degenerate(d) => DegenerateError::new_err(d.to_string()),
        other => QoctException::new_err(other.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    QoctException::new_err(e.to_string())
}

/// Complex 2×2 Jones matrix.
#[pyclass(name = "PolarizationMatrix", module = "qoct_py", frozen)]
struct PyMatrix(PolarizationMatrix);

#[pymethods]
impl PyMatrix {
    #[new]
    fn new(entries: [[Complex64; 2]; 2]) -> Self {
        Self(PolarizationMatrix(entries))
    }

    #[staticmethod]
    fn identity() -> Self {
        Self(PolarizationMatrix::IDENTITY)
    }

    #[staticmethod]
    fn pauli(index: u8) -> PyResult<Self> {
        jones::pauli(index).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn rotator(alpha: f64) -> Self {
        Self(jones::rotator(alpha))
    }

    #[staticmethod]
    fn wave_plate(retardance: f64, axis_angle: f64) -> Self {
        Self(jones::wave_plate(retardance, axis_angle))
    }

    #[staticmethod]
    fn exp_pauli(gamma: f64, sigma: PyRef<'_, Self>) -> Self {
        Self(jones::exp_pauli(gamma, &sigma.0))
    }

    /// Reference-arm operator: half-wave plate at `theta`, then an optional
    /// quarter-wave plate at `phi`.
    #[staticmethod]
    #[pyo3(signature = (theta, phi=None))]
    fn reference(theta: f64, phi: Option<f64>) -> Self {
        let arm = match phi {
            Some(p) => ReferenceArm::cascade(theta, p),
            None => ReferenceArm::rotator(theta),
        };
        Self(arm.operator())
    }

    fn entries(&self) -> [[Complex64; 2]; 2] {
        self.0 .0
    }

    fn dagger(&self) -> Self {
        Self(self.0.dagger())
    }

    fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        self.0.apply(&PolarizationVector(v)).0
    }

    fn distance(&self, other: PyRef<'_, Self>) -> f64 {
        self.0.distance(&other.0)
    }

    fn __matmul__(&self, other: PyRef<'_, Self>) -> Self {
        Self(self.0.mul(&other.0))
    }

    fn __repr__(&self) -> String {
        format!("PolarizationMatrix({:?})", self.0 .0)
    }
}

/// H/V interferogram on the `cτ/2` axis.
#[pyclass(name = "Interferogram", module = "qoct_py", frozen)]
struct PyInterferogram(Interferogram);

#[pymethods]
impl PyInterferogram {
    #[getter]
    fn ctau_um(&self) -> Vec<f64> {
        self.0.delays.iter().map(|x| x * 1e6).collect()
    }

    #[getter]
    fn r_h(&self) -> Vec<f64> {
        self.0.r_h.clone()
    }

    #[getter]
    fn r_v(&self) -> Vec<f64> {
        self.0.r_v.clone()
    }

    #[getter]
    fn r_t(&self) -> Vec<f64> {
        self.0.r_t.clone()
    }

    #[getter]
    fn lambda0(&self) -> (f64, f64) {
        (self.0.lambda0_h, self.0.lambda0_v)
    }

    #[getter]
    fn visibility(&self) -> f64 {
        self.0.visibility
    }

    #[getter]
    fn vanishing(&self) -> bool {
        self.0.vanishing
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        io::write_csv(&self.0, &path).map_err(to_py)
    }

    /// Features of R_T as JSON (positions and widths in metres).
    #[pyo3(signature = (prominence=DEFAULT_PROMINENCE))]
    fn find_dips(&self, prominence: f64) -> PyResult<String> {
        serde_json::to_string(&extract::find_dips(&self.0, prominence)).map_err(json_err)
    }

    /// Layer report as JSON, without the nulling step.
    #[pyo3(signature = (prominence=DEFAULT_PROMINENCE, max_winding=DEFAULT_MAX_WINDING))]
    fn layer_report(&self, prominence: f64, max_winding: u32) -> PyResult<String> {
        let features = extract::find_dips(&self.0, prominence);
        let report = extract::layer_report(&self.0, &features, max_winding).map_err(to_py)?;
        serde_json::to_string(&report).map_err(json_err)
    }
}

/// Forward model built from a run configuration.
#[pyclass(name = "Model", module = "qoct_py", frozen)]
struct PyModel(Model);

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn preset(py: Python<'_>, name: &str) -> PyResult<Self> {
        let run = presets::by_name(name).map_err(to_py)?;
        py.detach(|| build_model(&run)).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(py: Python<'_>, config: &str) -> PyResult<Self> {
        let run: RunConfig = parse_json(config, "config").map_err(to_py)?;
        py.detach(|| build_model(&run)).map(Self).map_err(to_py)
    }

    #[getter]
    fn omega0(&self) -> f64 {
        self.0.spectrum.omega0
    }

    #[getter]
    fn lambda_constant(&self) -> f64 {
        self.0.response.lambda_constant()
    }

    /// Normalized rate at delay `ctau_um` for the arm `(theta, phi)`.
    #[pyo3(signature = (ctau_um, theta, phi=None))]
    fn rate(&self, ctau_um: f64, theta: f64, phi: Option<f64>) -> f64 {
        let arm = match phi {
            Some(p) => ReferenceArm::cascade(theta, p),
            None => ReferenceArm::rotator(theta),
        };
        let tau = qoct::interferometer::rate_delay(ctau_um * 1e-6);
        self.0.response.coincidence_rate(&arm, &self.0.beam_splitter, tau, true)
    }

    /// H and V scans over the given delays (μm).
    fn interferogram(&self, py: Python<'_>, ctau_um: Vec<f64>) -> PyResult<PyInterferogram> {
        let delays: Vec<f64> = ctau_um.iter().map(|x| x * 1e-6).collect();
        py.detach(|| self.0.response.interferogram(&self.0.beam_splitter, &delays))
            .map(PyInterferogram)
            .map_err(to_py)
    }

    /// Full extraction on the model's own delay grid, as JSON.
    #[pyo3(signature = (prominence=DEFAULT_PROMINENCE, max_winding=DEFAULT_MAX_WINDING, step_deg=None))]
    fn extract(&self, py: Python<'_>, prominence: f64, max_winding: u32, step_deg: Option<f64>) -> PyResult<String> {
        let step = step_deg.map_or(DEFAULT_COARSE_STEP, f64::to_radians);
        let delays = self.0.run.delays.grid().map_err(to_py)?;
        let report = py
            .detach(|| {
                extract::extract(
                    &self.0.response,
                    &self.0.beam_splitter,
                    &delays,
                    prominence,
                    max_winding,
                    step,
                )
            })
            .map_err(to_py)?;
        serde_json::to_string(&report).map_err(json_err)
    }

    /// Nulling search at `ctau_um`, as JSON.
    #[pyo3(signature = (ctau_um, step_deg=1.0, delta=None))]
    fn null(&self, py: Python<'_>, ctau_um: f64, step_deg: f64, delta: Option<f64>) -> PyResult<String> {
        let report = py
            .detach(|| null_report(&self.0, ctau_um * 1e-6, step_deg.to_radians(), delta))
            .map_err(to_py)?;
        serde_json::to_string(&report).map_err(json_err)
    }
}

/// Runs a preset or a JSON configuration; returns the interferogram and the
/// sidecar JSON.
#[pyfunction]
#[pyo3(signature = (preset=None, config=None))]
fn run_simulation(py: Python<'_>, preset: Option<&str>, config: Option<&str>) -> PyResult<(PyInterferogram, String)> {
    let run = match (preset, config) {
        (Some(name), None) => presets::by_name(name).map_err(to_py)?,
        (None, Some(text)) => parse_json(text, "config").map_err(to_py)?,
        _ => return Err(QoctException::new_err("pass exactly one of preset or config")),
    };
    let sim = py.detach(|| simulate(&run, preset)).map_err(to_py)?;
    let sidecar = io::to_json(&sim.sidecar).map_err(to_py)?;
    Ok((PyInterferogram(sim.interferogram), sidecar))
}

#[pyfunction]
fn delta_from_ratio(lambda_v: f64, lambda_h: f64) -> PyResult<f64> {
    extract::delta_from_ratio(lambda_v, lambda_h).map_err(to_py)
}

#[pyfunction]
fn alpha_from_null(theta: f64, phi: f64, delta: f64) -> PyResult<f64> {
    extract::alpha_from_null(theta, phi, delta).map_err(to_py)
}

#[pyfunction]
fn null_residuals(theta: f64, phi: f64, alpha: f64, delta: f64) -> [f64; 2] {
    extract::null_residuals(theta, phi, alpha, delta)
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    presets::NAMES.to_vec()
}

#[pymodule]
fn qoct_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QoctException", m.py().get_type::<QoctException>())?;
    m.add("DegenerateError", m.py().get_type::<DegenerateError>())?;
    m.add_class::<PyMatrix>()?;
    m.add_class::<PyInterferogram>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(run_simulation, m)?)?;
    m.add_function(wrap_pyfunction!(delta_from_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_from_null, m)?)?;
    m.add_function(wrap_pyfunction!(null_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    Ok(())
}
