//! Python bindings for `geophase_core`.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use geophase_core::commands::{self, Command};
use geophase_core::config::RunConfig;
use geophase_core::connection::loop_holonomy_of;
use geophase_core::linalg::CMatrix;
use geophase_core::manifold::uniform_circle_path;
use geophase_core::models::{self, KForm, ModelSpec, TwoLevelParams};
use geophase_core::stochastic::{euler_maruyama, SdeProblem, StreamSeed};
use geophase_core::verify::{self, EnsembleSettings, Numerics};
use geophase_core::Error;

fn to_py(e: Error) -> PyErr {
    match e.exit_code() {
        1 => PyValueError::new_err(e.to_string()),
        2 => PyArithmeticError::new_err(e.to_string()),
        _ => PyOSError::new_err(e.to_string()),
    }
}

fn rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn k_form(name: &str) -> PyResult<KForm> {
    match name {
        "cos_half" => Ok(KForm::CosHalf),
        "sin_half" => Ok(KForm::SinHalf),
        "one" => Ok(KForm::One),
        "cos" => Ok(KForm::Cos),
        other => Err(PyValueError::new_err(format!("unknown k_form '{other}'"))),
    }
}

/// Two-level atom in the rotating frame, `H(θ) = ½[[0, Ωe^{iθ}], [Ωe^{-iθ}, 2Δ]]`.
#[pyclass(name = "TwoLevel", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyTwoLevel {
    inner: TwoLevelParams,
}

#[pymethods]
impl PyTwoLevel {
    #[new]
    fn new(omega: f64, delta: f64) -> PyResult<Self> {
        TwoLevelParams::new(omega, delta)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r()
    }

    #[getter]
    fn upper_eigenvalue(&self) -> f64 {
        self.inner.upper_eigenvalue()
    }

    fn hamiltonian(&self, theta: f64) -> Vec<Vec<Complex64>> {
        rows(models::rwa_hamiltonian(&self.inner, theta).matrix())
    }

    fn plus_state(&self, theta: f64) -> Vec<Complex64> {
        models::plus_eigenvector(&self.inner, theta).iter().copied().collect()
    }

    fn ap_coefficient(&self) -> Complex64 {
        models::analytic_ap_coefficient(&self.inner)
    }

    fn aq_coefficient(&self) -> Complex64 {
        models::analytic_aq_coefficient(&self.inner)
    }

    /// Geometric phase of the upper state after `loops` noiseless turns,
    /// from transported eigenframes on `steps` samples.
    #[pyo3(signature = (steps = 8000, loops = 1.0, branch = 1))]
    fn berry_phase(&self, steps: usize, loops: f64, branch: usize) -> PyResult<f64> {
        let control = uniform_circle_path(1.0, steps, loops).map_err(to_py)?;
        let points = control.points();
        let hams: Vec<_> = points
            .iter()
            .map(|x| models::rwa_hamiltonian(&self.inner, x[0]))
            .collect();
        let hol = loop_holonomy_of(&hams, &points, branch, 1e-9, 1e-6).map_err(to_py)?;
        Ok(hol.phases()[0])
    }

    fn __repr__(&self) -> String {
        format!("TwoLevel(omega={}, delta={})", self.inner.omega, self.inner.delta)
    }
}

/// `W(δθ) = diag(e^{iδθ/2}, e^{-iδθ/2})`
#[pyfunction]
fn disturbance_w(delta_theta: f64) -> Vec<Vec<Complex64>> {
    rows(&models::disturbance_w(delta_theta))
}

#[pyfunction]
fn sphere_latitude_phase(theta0: f64) -> f64 {
    models::sphere_latitude_phase(theta0)
}

/// One Euler-Maruyama path of `dδθ = k(θ) dW` along a uniform loop.
/// Returns `(times, delta_theta)`.
#[pyfunction]
#[pyo3(signature = (k_form = "cos_half", intensity = 0.25, t_end = 400.0, steps = 4000, loops = 1.0, seed = 0, stream = 0))]
fn phase_noise_path(
    k_form: &str,
    intensity: f64,
    t_end: f64,
    steps: usize,
    loops: f64,
    seed: u64,
    stream: u64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let problem = SdeProblem::phase_noise(self::k_form(k_form)?, intensity).map_err(to_py)?;
    let control = uniform_circle_path(t_end, steps, loops).map_err(to_py)?;
    let traj = euler_maruyama(
        &problem,
        &control,
        &[0.0],
        t_end / steps as f64,
        StreamSeed::new(seed, stream),
    )
    .map_err(to_py)?;
    Ok((traj.times.clone(), traj.component(0)))
}

/// Ensemble statistics of the dressed amplitude for the two-level model.
#[pyclass(name = "EnsembleResult", frozen, get_all)]
struct PyEnsembleResult {
    n: usize,
    seed: u64,
    times: Vec<f64>,
    kernel: Vec<f64>,
    dressed_modulus: Vec<f64>,
    dressed_stderr: Vec<f64>,
    characteristic: Vec<Complex64>,
    max_individual_deviation: f64,
    aq_coefficient: f64,
    fitted_c: Option<f64>,
    fitted_c_stderr: Option<f64>,
    abort_count: usize,
}

#[pyfunction]
#[pyo3(signature = (model, n = 10000, seed = 0, intensity = 0.25, k_form = "cos_half", t_end = 400.0, steps = 4000, loops = 1.0, record_every = 40))]
#[allow(clippy::too_many_arguments)]
fn ensemble(
    py: Python<'_>,
    model: &PyTwoLevel,
    n: usize,
    seed: u64,
    intensity: f64,
    k_form: &str,
    t_end: f64,
    steps: usize,
    loops: f64,
    record_every: usize,
) -> PyResult<PyEnsembleResult> {
    let settings = EnsembleSettings {
        k_form: self::k_form(k_form)?,
        intensity,
        t_end,
        steps,
        turns: loops,
        record_every,
        numerics: Numerics::default(),
    };
    let spec = ModelSpec::two_level(model.inner);
    let s = py
        .detach(|| verify::ensemble_average(&spec, &settings, n, seed))
        .map_err(to_py)?;
    Ok(PyEnsembleResult {
        n: s.n,
        seed: s.master_seed,
        times: s.times,
        kernel: s.kernel,
        dressed_modulus: s.dressed_modulus,
        dressed_stderr: s.dressed_stderr,
        characteristic: s.characteristic_mean,
        max_individual_deviation: s.max_individual_deviation,
        aq_coefficient: s.aq_coefficient,
        fitted_c: s.fit.as_ref().map(|f| f.c),
        fitted_c_stderr: s.fit.as_ref().map(|f| f.c_stderr),
        abort_count: s.abort_count,
    })
}

/// `(t_end, fidelity)` of the adiabatic state against exact propagation.
#[pyfunction]
#[pyo3(signature = (model, durations, steps_per_time = 10.0, loops = 1.0, substeps = 4))]
fn fidelity_sweep(
    py: Python<'_>,
    model: &PyTwoLevel,
    durations: Vec<f64>,
    steps_per_time: f64,
    loops: f64,
    substeps: usize,
) -> PyResult<Vec<(f64, f64)>> {
    let spec = ModelSpec::two_level(model.inner);
    let out = py
        .detach(|| verify::fidelity_sweep(&spec, &durations, steps_per_time, loops, substeps, &Numerics::default()))
        .map_err(to_py)?;
    Ok(out.into_iter().map(|r| (r.t_end, r.fidelity)).collect())
}

/// Run a CLI subcommand from a TOML config string; returns `report.json` text.
#[pyfunction]
#[pyo3(signature = (command, out_dir, config_toml = ""))]
fn run(py: Python<'_>, command: &str, out_dir: PathBuf, config_toml: &str) -> PyResult<String> {
    let command = match command {
        "holonomy" => Command::Holonomy,
        "evolve" => Command::Evolve,
        "ensemble" => Command::Ensemble,
        "sde-check" => Command::SdeCheck,
        "verify-adiabatic" => Command::VerifyAdiabatic,
        "curvature" => Command::Curvature,
        other => return Err(PyValueError::new_err(format!("unknown command '{other}'"))),
    };
    let mut config = RunConfig::from_toml_str(config_toml).map_err(to_py)?;
    config.output.dir = out_dir.clone();
    py.detach(|| commands::run(command, &config, &out_dir)).map_err(to_py)?;
    std::fs::read_to_string(out_dir.join("report.json")).map_err(|e| PyOSError::new_err(e.to_string()))
}

#[pymodule]
fn geophase(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyTwoLevel>()?;
    m.add_class::<PyEnsembleResult>()?;
    m.add_function(wrap_pyfunction!(disturbance_w, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_latitude_phase, m)?)?;
    m.add_function(wrap_pyfunction!(phase_noise_path, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
