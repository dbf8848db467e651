use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rsjd::cli::{self, Format, Options};
use rsjd::model::{validate_model, ModelSpec};
use rsjd::Error;

fn to_py(e: Error) -> PyErr {
    match cli::exit_code(&e) {
        cli::EXIT_CONFIG => PyValueError::new_err(e.to_string()),
        cli::EXIT_IO => PyOSError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// A validated regime-switching jump-diffusion model.
#[pyclass(frozen, module = "rsjd_py")]
struct Model {
    source: String,
    spec: ModelSpec,
}

#[pymethods]
impl Model {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        let spec = ModelSpec::from_toml_str(source).map_err(to_py)?;
        Ok(Self {
            source: source.to_owned(),
            spec,
        })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let source = std::fs::read_to_string(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))?;
        Self::new(&source)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    #[getter]
    fn regimes(&self) -> usize {
        self.spec.regimes()
    }

    #[getter]
    fn source(&self) -> &str {
        &self.source
    }

    /// Content hash of the canonical configuration.
    fn hash(&self) -> String {
        self.spec.hash()
    }

    /// Switching rate `q_ij(x)`; regimes are 1-based.
    fn rate(&self, x: Vec<f64>, i: usize, j: usize) -> PyResult<f64> {
        let (i, j) = (self.regime(i)?, self.regime(j)?);
        self.point(&x)?;
        Ok(self.spec.rate(&x, i, j))
    }

    fn killing_rate(&self, x: Vec<f64>, i: usize) -> PyResult<f64> {
        let i = self.regime(i)?;
        self.point(&x)?;
        Ok(self.spec.killing_rate(&x, i))
    }

    /// Assumption checks as a dict (the contents of `validation.json`).
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let report = validate_model(&self.spec);
        let text = serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        loads(py, &text)
    }

    fn __repr__(&self) -> String {
        format!("Model(d={}, m={}, hash={})", self.spec.dim(), self.spec.regimes(), &self.spec.hash()[..12])
    }
}

impl Model {
    fn regime(&self, i: usize) -> PyResult<usize> {
        if i == 0 || i > self.spec.regimes() {
            return Err(PyValueError::new_err(format!("regime {i} not in 1..={}", self.spec.regimes())));
        }
        Ok(i - 1)
    }

    fn point(&self, x: &[f64]) -> PyResult<()> {
        if x.len() != self.spec.dim() {
            return Err(PyValueError::new_err(format!("point has {} coordinates, model has d = {}", x.len(), self.spec.dim())));
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn command<'py>(
    py: Python<'py>,
    subcommand: &str,
    model: &Model,
    run: Option<&str>,
    paths: Option<usize>,
    seed: Option<u64>,
    step: Option<f64>,
    workers: Option<usize>,
    tweak: impl FnOnce(&mut Options),
) -> PyResult<Bound<'py, PyDict>> {
    let mut o = Options::from_run_source(run).map_err(to_py)?;
    o.paths = paths.unwrap_or(o.paths);
    o.seed = seed.unwrap_or(o.seed);
    o.step = step.unwrap_or(o.step);
    o.workers = workers;
    o.format = Format::Json;
    tweak(&mut o);
    let source = model.source.as_str();
    let ev = py
        .detach(|| cli::evaluate(subcommand, source, run, &o))
        .map_err(to_py)?;
    let outputs = PyDict::new(py);
    for (name, bytes) in &ev.files {
        let text = String::from_utf8_lossy(bytes);
        let key = name.rsplit_once('.').map_or(name.as_str(), |(stem, _)| stem);
        if name.ends_with(".json") {
            outputs.set_item(key, loads(py, &text)?)?;
        } else {
            outputs.set_item(key, text.into_owned())?;
        }
    }
    let out = PyDict::new(py);
    out.set_item("exit_code", ev.exit_code)?;
    out.set_item("summary", ev.summary)?;
    out.set_item("outputs", outputs)?;
    Ok(out)
}

/// Samples trajectories. Without `horizon` the run file's `[simulate]` section decides when to stop.
#[pyfunction]
#[pyo3(signature = (model, run=None, *, paths=None, seed=None, step=None, workers=None, horizon=None, x0=None, regime=None, events_only=false))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    model: &Model,
    run: Option<&str>,
    paths: Option<usize>,
    seed: Option<u64>,
    step: Option<f64>,
    workers: Option<usize>,
    horizon: Option<f64>,
    x0: Option<Vec<f64>>,
    regime: Option<usize>,
    events_only: bool,
) -> PyResult<Bound<'py, PyDict>> {
    command(py, "simulate", model, run, paths, seed, step, workers, |o| {
        o.horizon = horizon;
        o.x0 = x0;
        o.regime = regime;
        o.events_only = events_only;
    })
}

/// Monte Carlo estimates of the harmonic function at the run file's queries.
#[pyfunction]
#[pyo3(signature = (model, run, *, paths=None, seed=None, step=None, workers=None))]
fn harmonic<'py>(
    py: Python<'py>,
    model: &Model,
    run: &str,
    paths: Option<usize>,
    seed: Option<u64>,
    step: Option<f64>,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    command(py, "harmonic", model, Some(run), paths, seed, step, workers, |_| {})
}

/// Lattice solution of the coupled system by the frozen-regime fixed point.
#[pyfunction]
#[pyo3(signature = (model, run, *, paths=None, seed=None, step=None, workers=None))]
fn solve<'py>(
    py: Python<'py>,
    model: &Model,
    run: &str,
    paths: Option<usize>,
    seed: Option<u64>,
    step: Option<f64>,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    command(py, "solve", model, Some(run), paths, seed, step, workers, |_| {})
}

/// Runs the run file's verification checks; `outputs["reports"]` holds one dict per report.
#[pyfunction]
#[pyo3(signature = (model, run, *, paths=None, seed=None, step=None, workers=None))]
fn verify<'py>(
    py: Python<'py>,
    model: &Model,
    run: &str,
    paths: Option<usize>,
    seed: Option<u64>,
    step: Option<f64>,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    command(py, "verify", model, Some(run), paths, seed, step, workers, |_| {})
}

#[pymodule]
fn rsjd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(harmonic, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
