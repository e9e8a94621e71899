//! Python bindings for the `nonlocal` solvers.
//!
//! Grids are passed as `(t_min, t_max, n_points)` tuples and fields come back
//! as plain lists, so results drop straight into numpy or a plotting call.

use nonlocal::asymptotics::large_q_grid;
use nonlocal::physical::smooth_field_with;
use nonlocal::{CharModel, Error, Field, Grid, IterationConfig, KernelKind, KernelSpec, Model, SeedKind};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyComplex, PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;

create_exception!(nonlocal_py, SolverError, PyRuntimeError, "A solve or root search failed.");

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidGrid(_) | Error::InvalidParameter { .. } | Error::AsymmetricGrid { .. } | Error::Parse(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => SolverError::new_err(other.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    match v {
        Value::Null => Ok(py.None().into_bound(py)),
        Value::Bool(b) => b.into_bound_py_any(py),
        Value::Number(n) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => i.into_bound_py_any(py),
            (None, Some(f)) => f.into_bound_py_any(py),
            _ => n.to_string().into_bound_py_any(py),
        },
        Value::String(s) => s.into_bound_py_any(py),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            Ok(list.into_any())
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            Ok(dict.into_any())
        }
    }
}

fn to_dict<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyDict>> {
    Ok(to_py(py, v)?.cast_into::<PyDict>()?)
}

fn grid_of(spec: (f64, f64, usize)) -> PyResult<Grid> {
    Grid::new(spec.0, spec.1, spec.2).map_err(py_err)
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

fn char_model(model: &str) -> PyResult<CharModel> {
    parse(model)
}

fn config(
    grid: (f64, f64, usize),
    q2: f64,
    max_steps: usize,
    step_tol: f64,
    window: f64,
    seed: &str,
) -> PyResult<IterationConfig> {
    Ok(IterationConfig {
        max_steps,
        step_tol,
        window,
        ..IterationConfig::new(grid_of(grid)?).with_q_squared(q2).with_seed(parse::<SeedKind>(seed)?)
    })
}

fn put_field(d: &Bound<'_, PyDict>, key: &str, f: &Field) -> PyResult<()> {
    d.set_item(key, f.values().to_vec())
}

/// `-1 / (4 ln(4 / (3 sqrt 3)))`.
#[pyfunction]
fn q_string_squared() -> f64 {
    nonlocal::q_string_squared()
}

/// Kernel value at `(t, t_prime)` for `gauss`, `ferm`, `half-axis` or `smoothing`.
#[pyfunction]
#[pyo3(signature = (kind, t, t_prime, q2=0.0))]
fn kernel_weight(kind: &str, t: f64, t_prime: f64, q2: f64) -> PyResult<f64> {
    Ok(nonlocal::kernel_weight(&kernel_spec(kind, q2, 10.0)?, t, t_prime))
}

fn kernel_spec(kind: &str, q2: f64, window: f64) -> PyResult<KernelSpec> {
    let kind = match kind {
        "gauss" => KernelKind::GaussK,
        "ferm" => KernelKind::FermKq,
        "half-axis" => KernelKind::HalfAxisKminus,
        "smoothing" => KernelKind::Smoothing,
        other => return Err(PyValueError::new_err(format!("unknown kernel `{other}`"))),
    };
    Ok(KernelSpec { kind, q_squared: q2, window })
}

/// Windowed convolution of `values` sampled on `grid`.
#[pyfunction]
#[pyo3(signature = (kind, values, grid, q2=0.0, window=10.0))]
fn convolve(kind: &str, values: Vec<f64>, grid: (f64, f64, usize), q2: f64, window: f64) -> PyResult<Vec<f64>> {
    let f = Field::new(grid_of(grid)?, values).map_err(py_err)?;
    let out = nonlocal::convolve(&kernel_spec(kind, q2, window)?, &f).map_err(py_err)?;
    Ok(out.into_values())
}

/// Runs one model. The report has `t` and `phi`, plus `sigma` for ferm2 and
/// `regime` for ferm1. A NegativeSqrt or NonFinite stop is reported in
/// `terminated_by`, not raised.
#[pyfunction]
#[pyo3(signature = (model, q2=0.0, grid=(-10.0, 10.0, 2001), max_steps=2000, step_tol=1e-9, window=10.0, seed="neg-step"))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    model: &str,
    q2: f64,
    grid: (f64, f64, usize),
    max_steps: usize,
    step_tol: f64,
    window: f64,
    seed: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let model: Model = parse(model)?;
    let cfg = config(grid, q2, max_steps, step_tol, window, seed)?;
    let (report, sigma) = py
        .detach(|| -> nonlocal::Result<_> {
            if model == Model::Ferm2 {
                let (r, state) = nonlocal::solve_ferm2(&cfg)?;
                Ok((r, Some(state.sigma)))
            } else {
                Ok((nonlocal::solve(model, &cfg)?, None))
            }
        })
        .map_err(py_err)?;
    let d = to_dict(py, &report.to_json(None))?;
    d.set_item("t", report.grid.nodes())?;
    put_field(&d, "phi", &report.final_field)?;
    if let Some(j) = report.final_field.jump() {
        d.set_item("jump", (j.left, j.right))?;
    }
    if let Some(s) = sigma {
        put_field(&d, "sigma", &s)?;
    }
    if model == Model::Ferm1 {
        let regime = nonlocal::classify(&report);
        d.set_item("regime", regime.kind.to_string())?;
        d.set_item("regime_evidence", regime.evidence)?;
    }
    Ok(d)
}

/// Relative deviation of the first two half-axis iterates.
#[pyfunction]
#[pyo3(signature = (grid=(-10.0, 0.0, 1001)))]
fn deviation_profile<'py>(py: Python<'py>, grid: (f64, f64, usize)) -> PyResult<Bound<'py, PyDict>> {
    let cfg = IterationConfig::new(grid_of(grid)?);
    let p = py.detach(|| nonlocal::deviation_profile(&cfg)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("delta_max", p.delta_max)?;
    d.set_item("t", p.delta.grid().nodes())?;
    put_field(&d, "delta", &p.delta)?;
    put_field(&d, "phi1", &p.phi1)?;
    put_field(&d, "phi2", &p.phi2)?;
    Ok(d)
}

/// Bisection for the critical q^2 of `ferm1` or `ferm2`.
#[pyfunction]
#[pyo3(signature = (model, lo, hi, bisections=6, max_steps=2000, grid=(-10.0, 10.0, 2001)))]
fn find_qcr<'py>(
    py: Python<'py>,
    model: &str,
    lo: f64,
    hi: f64,
    bisections: usize,
    max_steps: usize,
    grid: (f64, f64, usize),
) -> PyResult<Bound<'py, PyDict>> {
    let model: Model = parse(model)?;
    let cfg = IterationConfig::new(grid_of(grid)?).with_max_steps(max_steps);
    let est = py.detach(|| nonlocal::find_qcr(model, lo, hi, &cfg, bisections)).map_err(py_err)?;
    to_dict(py, &est.to_json())
}

/// Characteristic function at complex `omega`.
#[pyfunction]
fn char_value<'py>(
    py: Python<'py>,
    model: &str,
    omega: Bound<'py, PyComplex>,
    q2: f64,
) -> PyResult<Bound<'py, PyComplex>> {
    let w = Complex64::new(omega.real(), omega.imag());
    let f = nonlocal::char_value(char_model(model)?, w, q2);
    Ok(PyComplex::from_doubles(py, f.re, f.im))
}

/// Newton root of the characteristic equation from `guess`.
#[pyfunction]
fn find_omega<'py>(
    py: Python<'py>,
    model: &str,
    q2: f64,
    guess: Bound<'py, PyComplex>,
) -> PyResult<Bound<'py, PyDict>> {
    let m = char_model(model)?;
    let root = nonlocal::find_omega(m, q2, Complex64::new(guess.real(), guess.imag())).map_err(py_err)?;
    to_dict(py, &root.to_json(m, q2))
}

/// Principal root continued from its closed form at q^2 = 0.
#[pyfunction]
#[pyo3(signature = (model, q2, steps=100))]
fn track_root<'py>(py: Python<'py>, model: &str, q2: f64, steps: usize) -> PyResult<Bound<'py, PyDict>> {
    let m = char_model(model)?;
    let root = nonlocal::track_root(m, q2, steps).map_err(py_err)?;
    to_dict(py, &root.to_json(m, q2))
}

/// Smallest q^2 with a real double root.
#[pyfunction]
fn find_q0<'py>(py: Python<'py>, model: &str) -> PyResult<Bound<'py, PyDict>> {
    let m = char_model(model)?;
    to_dict(py, &nonlocal::find_q0(m).map_err(py_err)?.to_json(m))
}

/// Smoothed two-field and single-equation fields at `q2` (default: the
/// string value).
#[pyfunction]
#[pyo3(signature = (q2=None, grid=(-10.0, 10.0, 2001)))]
fn compare_models<'py>(py: Python<'py>, q2: Option<f64>, grid: (f64, f64, usize)) -> PyResult<Bound<'py, PyDict>> {
    let q2 = q2.unwrap_or_else(nonlocal::q_string_squared);
    let cfg = IterationConfig::new(grid_of(grid)?);
    let c = py.detach(|| nonlocal::compare_models(q2, &cfg)).map_err(py_err)?;
    let d = to_dict(py, &c.to_json())?;
    d.set_item("t", c.psi_exact.grid().nodes())?;
    put_field(&d, "psi_exact", &c.psi_exact)?;
    put_field(&d, "psi_approx", &c.psi_approx)?;
    put_field(&d, "upsilon_exact", &c.upsilon_exact)?;
    put_field(&d, "upsilon_approx", &c.upsilon_approx)?;
    Ok(d)
}

/// Gaussian smoothing `e^{(1/8) d^2}` of `values` on `grid`.
#[pyfunction]
#[pyo3(signature = (values, grid, window=10.0))]
fn smooth_field(values: Vec<f64>, grid: (f64, f64, usize), window: f64) -> PyResult<Vec<f64>> {
    let f = Field::new(grid_of(grid)?, values).map_err(py_err)?;
    Ok(smooth_field_with(&f, window).map_err(py_err)?.into_values())
}

/// Large-q periodic solution against the oscillator orbit.
#[pyfunction]
#[pyo3(signature = (q2, grid=None))]
fn large_q_comparison<'py>(py: Python<'py>, q2: f64, grid: Option<(f64, f64, usize)>) -> PyResult<Bound<'py, PyDict>> {
    let grid = match grid {
        Some(g) => grid_of(g)?,
        None => large_q_grid(q2).map_err(py_err)?,
    };
    let cfg = IterationConfig::new(grid);
    let c = py.detach(|| nonlocal::large_q_comparison(q2, &cfg)).map_err(py_err)?;
    let d = to_dict(py, &c.to_json())?;
    d.set_item("t", c.rescaled.grid().nodes())?;
    put_field(&d, "chi", &c.rescaled)?;
    Ok(d)
}

/// RK4 orbit of `chi'' = chi - chi^3`.
#[pyfunction]
#[pyo3(signature = (chi0, dchi0, dt=1e-3, max_time=20.0))]
fn oscillator_orbit<'py>(
    py: Python<'py>,
    chi0: f64,
    dchi0: f64,
    dt: f64,
    max_time: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let o = nonlocal::oscillator_orbit(chi0, dchi0, dt, max_time).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("period", o.period)?;
    d.set_item("energy", o.energy)?;
    d.set_item("energy_drift", o.energy_drift)?;
    d.set_item("t", o.times)?;
    d.set_item("chi", o.chi)?;
    d.set_item("dchi", o.dchi)?;
    Ok(d)
}

/// Runs the command-line front end with `args` (no program name); returns
/// the exit code. The JSON document goes to stdout.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    py.detach(|| nonlocal::cli::run(std::iter::once("nonlocal".to_string()).chain(args)))
}

#[pymodule]
fn nonlocal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add_function(wrap_pyfunction!(q_string_squared, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_weight, m)?)?;
    m.add_function(wrap_pyfunction!(convolve, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(deviation_profile, m)?)?;
    m.add_function(wrap_pyfunction!(find_qcr, m)?)?;
    m.add_function(wrap_pyfunction!(char_value, m)?)?;
    m.add_function(wrap_pyfunction!(find_omega, m)?)?;
    m.add_function(wrap_pyfunction!(track_root, m)?)?;
    m.add_function(wrap_pyfunction!(find_q0, m)?)?;
    m.add_function(wrap_pyfunction!(compare_models, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_field, m)?)?;
    m.add_function(wrap_pyfunction!(large_q_comparison, m)?)?;
    m.add_function(wrap_pyfunction!(oscillator_orbit, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
