//! Python bindings: grids, fields, potentials, evolution, scattering and the experiment runner.

use bosonstar::dynamics::{self, SolverConfig};
use bosonstar::experiments::{self, ExperimentConfig};
use bosonstar::observables;
use bosonstar::potentials::{build_kernel, ConvolutionKernel, PotentialSpec};
use bosonstar::scattering::{self, ScatteringConfig};
use bosonstar::spectral::{self, GridSpec, Representation, SpectralField};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: bosonstar::Error) -> PyErr {
    match e {
        bosonstar::Error::Io(_) | bosonstar::Error::BlowupDetected { .. } | bosonstar::Error::NoContraction { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Periodic box `[-L/2, L/2)^d` with `n` points per axis.
#[pyclass(name = "Grid", module = "bosonstar", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid(GridSpec);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(dim: usize, n: usize, length: f64) -> PyResult<Self> {
        GridSpec::cubic(dim, n, length).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.0.shape().to_vec()
    }

    #[getter]
    fn lengths(&self) -> Vec<f64> {
        self.0.lengths().to_vec()
    }

    fn coordinates(&self, axis: usize) -> PyResult<Vec<f64>> {
        self.check_axis(axis)?;
        Ok(self.0.coordinates(axis))
    }

    fn frequencies(&self, axis: usize) -> PyResult<Vec<f64>> {
        self.check_axis(axis)?;
        Ok(self.0.frequencies(axis))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Grid(shape={:?}, lengths={:?})", self.0.shape(), self.0.lengths())
    }
}

impl PyGrid {
    fn check_axis(&self, axis: usize) -> PyResult<()> {
        if axis >= self.0.dim() {
            return Err(PyValueError::new_err(format!("axis {axis} out of range")));
        }
        Ok(())
    }
}

/// A complex field on a grid, stored in physical space on the Python side.
#[pyclass(name = "Field", module = "bosonstar", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField(SpectralField);

#[pymethods]
impl PyField {
    /// Field from physical-space samples in row-major order.
    #[new]
    fn new(grid: &PyGrid, values: Vec<Complex64>) -> PyResult<Self> {
        SpectralField::from_values(grid.0.clone(), values, Representation::Physical).map(Self).map_err(err)
    }

    /// Initial data from a JSON description such as `{"type": "gaussian", "width": 1.0}`.
    #[staticmethod]
    #[pyo3(signature = (grid, spec, seed = 0))]
    fn initial(grid: &PyGrid, spec: &str, seed: u64) -> PyResult<Self> {
        let spec: bosonstar::initial::InitialSpec = serde_json::from_str(spec).map_err(json_err)?;
        spec.validate(grid.0.dim()).map_err(err)?;
        spec.build(&grid.0, seed).map(Self).map_err(err)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid().clone())
    }

    fn values(&self) -> Vec<Complex64> {
        self.0.to_physical().into_values()
    }

    fn spectrum(&self) -> Vec<Complex64> {
        self.0.to_frequency().into_values()
    }

    fn norm(&self) -> f64 {
        self.0.norm_l2()
    }

    fn free_propagate(&self, t: f64) -> Self {
        Self(spectral::free_propagate(&self.0, t))
    }

    fn distance(&self, other: &PyField) -> PyResult<f64> {
        self.0.sub(&other.0).map(|d| d.norm_l2()).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Field(shape={:?}, norm={:.6e})", self.0.grid().shape(), self.0.norm_l2())
    }
}

/// Interaction potential sampled on a grid.
#[pyclass(name = "Kernel", module = "bosonstar", frozen)]
struct PyKernel {
    spec: PotentialSpec,
    kernel: ConvolutionKernel,
}

#[pymethods]
impl PyKernel {
    /// Kernel from a JSON description such as `{"type": "yukawa", "kappa": -0.2, "mu": 1.0}`.
    #[new]
    #[pyo3(signature = (grid, spec, dealias = true))]
    fn new(grid: &PyGrid, spec: &str, dealias: bool) -> PyResult<Self> {
        let spec: PotentialSpec = serde_json::from_str(spec).map_err(json_err)?;
        spec.validate(grid.0.dim()).map_err(err)?;
        let kernel = build_kernel(&spec, &grid.0, dealias).map_err(err)?;
        Ok(Self { spec, kernel })
    }

    #[staticmethod]
    fn free(grid: &PyGrid) -> PyResult<Self> {
        let spec = PotentialSpec::zero();
        let kernel = build_kernel(&spec, &grid.0, true).map_err(err)?;
        Ok(Self { spec, kernel })
    }

    fn interaction_norm(&self) -> f64 {
        self.spec.interaction_norm(self.kernel.grid())
    }

    fn spec(&self) -> PyResult<String> {
        serde_json::to_string(&self.spec).map_err(json_err)
    }
}

#[pyfunction]
fn mass(psi: &PyField) -> f64 {
    observables::mass(&psi.0)
}

#[pyfunction]
fn energy(psi: &PyField, kernel: &PyKernel) -> PyResult<f64> {
    observables::energy(&psi.0, &kernel.kernel).map_err(err)
}

#[pyfunction]
fn momentum(psi: &PyField) -> Vec<f64> {
    observables::momentum(&psi.0)
}

#[pyfunction]
fn hs_norm(psi: &PyField, s: f64) -> f64 {
    observables::hs_norm(&psi.0, s)
}

#[pyfunction]
fn velocity_band_mass(psi: &PyField, t: f64, lo: f64, hi: f64) -> PyResult<f64> {
    observables::velocity_band_mass(&psi.0, t, lo, hi).map_err(err)
}

#[pyfunction]
fn strang_step(psi: &PyField, kernel: &PyKernel, dt: f64) -> PyResult<PyField> {
    dynamics::strang_step(&psi.0, &kernel.kernel, dt).map(PyField).map_err(err)
}

type Records = Vec<(f64, Vec<(String, f64)>)>;

/// Evolves to `t_final`; returns the final field and the recorded observables as `(t, [(name, value), ...])` rows.
#[pyfunction]
#[pyo3(signature = (psi, kernel, dt, t_final, stride = 1, integrator = "strang"))]
fn evolve(
    psi: &PyField,
    kernel: &PyKernel,
    dt: f64,
    t_final: f64,
    stride: usize,
    integrator: &str,
) -> PyResult<(PyField, Records)> {
    let mut cfg = SolverConfig::new(dt, t_final).with_stride(stride);
    cfg.integrator = serde_json::from_value(serde_json::Value::String(integrator.into())).map_err(json_err)?;
    cfg.keep_fields = true;
    let traj = dynamics::solve(&psi.0, &kernel.kernel, &cfg).map_err(err)?;
    if let dynamics::Outcome::Blowup { t } = traj.outcome {
        return Err(err(bosonstar::Error::BlowupDetected { t }));
    }
    let last = traj.last_field().cloned().unwrap_or_else(|| psi.0.clone());
    let records = traj.records.into_iter().map(|r| (r.t, r.values)).collect();
    Ok((PyField(last), records))
}

/// Scattering state `psi_+` of `psi0`, truncated at `t_inf`.
#[pyfunction]
#[pyo3(signature = (psi0, kernel, t_inf, dt = 0.02))]
fn scattering_state(psi0: &PyField, kernel: &PyKernel, t_inf: f64, dt: f64) -> PyResult<(PyField, String)> {
    let cfg = ScatteringConfig::new(t_inf, dt);
    let res = scattering::inverse_wave(&psi0.0, &kernel.kernel, &cfg).map_err(err)?;
    let summary = serde_json::to_string(&res).map_err(json_err)?;
    Ok((PyField(res.psi), summary))
}

/// Initial data `Omega_+ psi_+`, truncated at `t_inf`.
#[pyfunction]
#[pyo3(signature = (psi_plus, kernel, t_inf, dt = 0.02))]
fn wave_operator(psi_plus: &PyField, kernel: &PyKernel, t_inf: f64, dt: f64) -> PyResult<PyField> {
    let cfg = ScatteringConfig::new(t_inf, dt);
    scattering::wave_operator(&psi_plus.0, &kernel.kernel, &cfg).map(|r| PyField(r.psi)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (psi, kernel, t_inf, dt = 0.02))]
fn roundtrip(psi: &PyField, kernel: &PyKernel, t_inf: f64, dt: f64) -> PyResult<f64> {
    scattering::roundtrip(&psi.0, &kernel.kernel, &ScatteringConfig::new(t_inf, dt)).map_err(err)
}

/// Runs an experiment from its JSON config; returns the report as JSON.
#[pyfunction]
fn run_experiment(config: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config).map_err(err)?;
    let out = experiments::run(&cfg).map_err(err)?;
    serde_json::to_string(&out.report).map_err(json_err)
}

#[pymodule]
#[pyo3(name = "bosonstar")]
fn bosonstar_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyKernel>()?;
    m.add_function(wrap_pyfunction!(mass, m)?)?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(momentum, m)?)?;
    m.add_function(wrap_pyfunction!(hs_norm, m)?)?;
    m.add_function(wrap_pyfunction!(velocity_band_mass, m)?)?;
    m.add_function(wrap_pyfunction!(strang_step, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(scattering_state, m)?)?;
    m.add_function(wrap_pyfunction!(wave_operator, m)?)?;
    m.add_function(wrap_pyfunction!(roundtrip, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
