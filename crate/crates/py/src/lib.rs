//! Python bindings. Boundary functions are given either as a float
//! (constant) or as a dict such as `{"kind": "ramp", "a": 1.0, "b": 0.5}`.

use carleman_core::audit::run_property_audit;
use carleman_core::diffusion::{self, DiffusionConfig};
use carleman_core::entropy::{self, ConvexIndex};
use carleman_core::harness::{self, SweepConfig};
use carleman_core::kinetic::{self, KineticConfig};
use carleman_core::model::{entropy_params, eval_boundary, validate_admissible};
use carleman_core::{Error, Grid1D, InitialData, Side, TimeFn};
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NumericalAbort { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::NewtonFailure { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn time_fn(obj: &Bound<'_, PyAny>) -> PyResult<TimeFn> {
    if let Ok(c) = obj.extract::<f64>() {
        return Ok(TimeFn::Constant { c });
    }
    let d = obj.cast::<PyDict>()?;
    let get = |k: &str| -> PyResult<f64> {
        d.get_item(k)?
            .ok_or_else(|| PyValueError::new_err(format!("missing key '{k}'")))?
            .extract()
    };
    let kind: String = d
        .get_item("kind")?
        .ok_or_else(|| PyValueError::new_err("missing key 'kind'"))?
        .extract()?;
    match kind.as_str() {
        "constant" => Ok(TimeFn::Constant { c: get("a")? }),
        "ramp" => Ok(TimeFn::Ramp {
            a: get("a")?,
            b: get("b")?,
        }),
        "sinusoid" => Ok(TimeFn::Sinusoid {
            a: get("a")?,
            b: get("b")?,
            omega: get("omega")?,
        }),
        other => Err(PyValueError::new_err(format!(
            "unknown boundary kind '{other}'"
        ))),
    }
}

/// Inflow boundary data on `[0, horizon]`.
#[pyclass(name = "BoundaryData", from_py_object)]
#[derive(Clone)]
struct PyBoundary {
    inner: carleman_core::BoundaryData,
}

#[pymethods]
impl PyBoundary {
    #[new]
    #[pyo3(signature = (left, right, horizon))]
    fn new(left: &Bound<'_, PyAny>, right: &Bound<'_, PyAny>, horizon: f64) -> PyResult<Self> {
        Ok(Self {
            inner: carleman_core::BoundaryData::new(time_fn(left)?, time_fn(right)?, horizon),
        })
    }

    /// `(phi_minus(t), phi_plus(t))`.
    fn at(&self, t: f64) -> PyResult<(f64, f64)> {
        let l = eval_boundary(&self.inner, Side::Left, t).map_err(to_py)?;
        let r = eval_boundary(&self.inner, Side::Right, t).map_err(to_py)?;
        Ok((l, r))
    }

    fn violations(&self) -> Vec<String> {
        self.inner.violations()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon
    }

    fn __repr__(&self) -> String {
        format!(
            "BoundaryData(left={}, right={}, horizon={})",
            self.inner.phi_minus, self.inner.phi_plus, self.inner.horizon
        )
    }
}

fn index(beta: f64) -> PyResult<ConvexIndex> {
    ConvexIndex::new(beta).map_err(to_py)
}

#[pyfunction]
fn phi(beta: f64, y: f64) -> PyResult<f64> {
    Ok(entropy::phi(index(beta)?, y))
}

#[pyfunction]
fn phi_dual(beta: f64, xi: f64) -> PyResult<f64> {
    Ok(entropy::phi_dual(index(beta)?, xi))
}

/// Shifted convex function with the shift taken from `bc`.
#[pyfunction]
fn big_phi(beta: f64, y: f64, bc: &PyBoundary) -> PyResult<f64> {
    let params = entropy_params(&bc.inner);
    Ok(entropy::big_phi(index(beta)?, y, &params))
}

#[pyfunction]
fn coercivity_constant(alpha: f64) -> PyResult<f64> {
    entropy::coercivity_constant(alpha).map_err(to_py)
}

#[pyfunction]
fn nonlinearity(alpha: f64, rho: f64) -> PyResult<f64> {
    diffusion::nonlinearity(alpha, rho).map_err(to_py)
}

#[pyfunction]
fn steady_state(alpha: f64, phi_minus: f64, phi_plus: f64, x: f64) -> f64 {
    diffusion::steady_state(alpha, phi_minus, phi_plus, x)
}

#[pyfunction]
#[pyo3(signature = (rho_left, rho_right, rho0, t, modes = 400))]
fn heat_oracle(
    rho_left: f64,
    rho_right: f64,
    rho0: Vec<f64>,
    t: f64,
    modes: usize,
) -> PyResult<Vec<f64>> {
    let grid = Grid1D::new(rho0.len()).map_err(to_py)?;
    Ok(harness::heat_oracle(
        rho_left, rho_right, &rho0, &grid, t, modes,
    ))
}

/// Admissibility violations of a problem (empty when admissible).
#[pyfunction]
fn validate(bc: &PyBoundary, u: Vec<f64>, v: Vec<f64>, alpha: f64) -> PyResult<Vec<String>> {
    let init = InitialData::new(u, v).map_err(to_py)?;
    Ok(validate_admissible(&bc.inner, &init, alpha).violations)
}

/// Runs the kinetic solver and returns a dict with the final fields and
/// per-beta entropy ledgers.
#[pyfunction]
#[pyo3(signature = (alpha, epsilon, bc, u, v, t_end, cfl = 1.0, betas = None))]
#[allow(clippy::too_many_arguments)]
fn run_kinetic<'py>(
    py: Python<'py>,
    alpha: f64,
    epsilon: f64,
    bc: &PyBoundary,
    u: Vec<f64>,
    v: Vec<f64>,
    t_end: f64,
    cfl: f64,
    betas: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = Grid1D::new(u.len()).map_err(to_py)?;
    let init = InitialData::new(u, v).map_err(to_py)?;
    let mut cfg = KineticConfig::new(alpha, epsilon, grid, t_end, bc.inner, init);
    cfg.cfl = cfl;
    cfg.ledger_betas = betas
        .unwrap_or_default()
        .into_iter()
        .map(index)
        .collect::<PyResult<_>>()?;
    let out = py.detach(|| kinetic::run(&cfg)).map_err(to_py)?;

    let d = PyDict::new(py);
    d.set_item("t", out.final_state.t)?;
    d.set_item("steps", out.steps)?;
    d.set_item("dt", out.dt)?;
    d.set_item("x", grid.centers())?;
    d.set_item("u", out.final_state.u.clone())?;
    d.set_item("v", out.final_state.v.clone())?;
    d.set_item("rho", out.final_state.rho())?;
    d.set_item("mass_defect", out.mass.relative_defect())?;
    let ledgers = PyDict::new(py);
    for l in &out.ledgers {
        let rows = PyList::empty(py);
        for r in &l.rows {
            let row = PyDict::new(py);
            row.set_item("t", r.t)?;
            row.set_item("H", r.h)?;
            row.set_item("P", r.p)?;
            row.set_item("boundary_term", r.boundary_term)?;
            row.set_item("residual", r.residual)?;
            rows.append(row)?;
        }
        ledgers.set_item(l.beta.beta(), rows)?;
    }
    d.set_item("ledgers", ledgers)?;
    Ok(d)
}

/// Implicit solve of the limiting diffusion equation; returns
/// `(times, rho)` with one row per step.
#[pyfunction]
#[pyo3(signature = (alpha, bc, rho0, t_end, dt))]
fn run_diffusion(
    py: Python<'_>,
    alpha: f64,
    bc: &PyBoundary,
    rho0: Vec<f64>,
    t_end: f64,
    dt: f64,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let grid = Grid1D::new(rho0.len()).map_err(to_py)?;
    let cfg = DiffusionConfig::new(alpha, grid, dt, t_end, bc.inner, rho0);
    let out = py.detach(|| diffusion::solve(&cfg)).map_err(to_py)?;
    Ok((out.trajectory.times, out.trajectory.rho))
}

/// Epsilon sweep; returns the convergence rows and the acceptance flags.
#[pyfunction]
#[pyo3(signature = (alpha, bc, u, v, t_end, epsilons, jobs = 1))]
#[allow(clippy::too_many_arguments)]
fn run_sweep<'py>(
    py: Python<'py>,
    alpha: f64,
    bc: &PyBoundary,
    u: Vec<f64>,
    v: Vec<f64>,
    t_end: f64,
    epsilons: Vec<f64>,
    jobs: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = Grid1D::new(u.len()).map_err(to_py)?;
    let init = InitialData::new(u, v).map_err(to_py)?;
    let mut cfg = SweepConfig::new(alpha, bc.inner, init, t_end, epsilons, grid);
    cfg.jobs = jobs.max(1);
    let rep = py.detach(|| harness::run_sweep(&cfg)).map_err(to_py)?;

    let d = PyDict::new(py);
    let rows = PyList::empty(py);
    for r in &rep.rows {
        let row = PyDict::new(py);
        row.set_item("epsilon", r.epsilon)?;
        row.set_item("l2_err", r.l2_err)?;
        row.set_item("boundary_err_left", r.boundary_err_left)?;
        row.set_item("boundary_err_right", r.boundary_err_right)?;
        row.set_item("failure", r.failure.clone())?;
        rows.append(row)?;
    }
    d.set_item("rows", rows)?;
    let f = rep.flags;
    let flags = PyDict::new(py);
    flags.set_item("l2_strictly_decreasing", f.l2_strictly_decreasing)?;
    flags.set_item("l2_halved", f.l2_halved)?;
    flags.set_item("boundary_left_decreasing", f.boundary_left_decreasing)?;
    flags.set_item("boundary_right_decreasing", f.boundary_right_decreasing)?;
    flags.set_item("bounds_uniform", f.bounds_uniform)?;
    flags.set_item("entropy_inequality", f.entropy_inequality)?;
    flags.set_item("all_runs_ok", f.all_runs_ok)?;
    d.set_item("flags", flags)?;
    Ok(d)
}

/// Seeded property audit; returns `{check_name: (samples, passed)}`.
#[pyfunction]
#[pyo3(signature = (seed = 42, samples = 1000))]
fn property_audit<'py>(py: Python<'py>, seed: u64, samples: usize) -> PyResult<Bound<'py, PyDict>> {
    let summary = py.detach(|| run_property_audit(seed, samples));
    let d = PyDict::new(py);
    for c in &summary.checks {
        d.set_item(c.name, (c.samples, c.passed))?;
    }
    Ok(d)
}

#[pymodule]
fn carleman(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBoundary>()?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(phi_dual, m)?)?;
    m.add_function(wrap_pyfunction!(big_phi, m)?)?;
    m.add_function(wrap_pyfunction!(coercivity_constant, m)?)?;
    m.add_function(wrap_pyfunction!(nonlinearity, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(heat_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(run_kinetic, m)?)?;
    m.add_function(wrap_pyfunction!(run_diffusion, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(property_audit, m)?)?;
    Ok(())
}
