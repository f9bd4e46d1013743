//! Python bindings: case presets, time stepping, errors, snapshots and the
//! verification suites.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mac_swe::cases::{CaseName, CaseSpec, RiemannSolution};
use mac_swe::config::parse_config as parse_config_text;
use mac_swe::diagnostics::l1_error;
use mac_swe::driver::convergence as run_convergence;
use mac_swe::fields::State;
use mac_swe::io::{cell_velocity, write_vtk};
use mac_swe::schemes::{advance, SchemeConfig, SchemeKind};
use mac_swe::verify::{identity_suite, lake_at_rest_suite, positivity_suite};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A case preset together with its current state.
#[pyclass]
pub struct Simulation {
    case: CaseSpec,
    cfg: SchemeConfig,
    state: State,
    steps: usize,
}

impl Simulation {
    fn step_once(&mut self, dt_max: f64) -> PyResult<()> {
        let out = advance(&self.state, &self.case.z, &self.case.mesh, &self.cfg, dt_max).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        if !out.state.is_finite() {
            return Err(PyRuntimeError::new_err(format!("non-finite state at step {}", self.steps + 1)));
        }
        self.state = out.state;
        self.steps += 1;
        Ok(())
    }

    fn grid(&self, v: &[f64]) -> Vec<Vec<f64>> {
        v.chunks(self.case.mesh.nx()).map(|r| r.to_vec()).collect()
    }
}

#[pymethods]
impl Simulation {
    #[new]
    #[pyo3(signature = (case, mesh = None, scheme = "heun_muscl", g = None))]
    fn new(case: &str, mesh: Option<usize>, scheme: &str, g: Option<f64>) -> PyResult<Self> {
        let name: CaseName = case.parse().map_err(value_err)?;
        let kind: SchemeKind = scheme.parse().map_err(value_err)?;
        let case = CaseSpec::build(name, mesh.unwrap_or(name.defaults().resolution), g).map_err(value_err)?;
        let cfg = case.scheme_config(kind);
        let state = case.initial.clone();
        Ok(Simulation { case, cfg, state, steps: 0 })
    }

    /// Advances `n` steps.
    fn step(&mut self, n: usize) -> PyResult<()> {
        for _ in 0..n {
            self.step_once(f64::INFINITY)?;
        }
        Ok(())
    }

    /// Advances until `t`, clipping the last step; `None` means the preset end time.
    #[pyo3(signature = (t = None))]
    fn run_until(&mut self, t: Option<f64>) -> PyResult<()> {
        let t = t.unwrap_or(self.case.t_end);
        while t - self.state.time > 1e-12 * t.abs().max(1.0) {
            self.step_once(t - self.state.time)?;
        }
        Ok(())
    }

    #[getter]
    fn time(&self) -> f64 {
        self.state.time
    }

    #[getter]
    fn steps(&self) -> usize {
        self.steps
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.case.mesh.nx(), self.case.mesh.ny())
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.case.t_end
    }

    fn mass(&self) -> f64 {
        self.state.mass(&self.case.mesh)
    }

    fn min_h(&self) -> f64 {
        self.state.h.min_active(&self.case.mesh)
    }

    /// Cell heights as rows `h[j][i]`; inactive cells read 0.
    fn height(&self) -> Vec<Vec<f64>> {
        let m = &self.case.mesh;
        let flat: Vec<f64> = (0..m.ny()).flat_map(|j| (0..m.nx()).map(move |i| (i, j))).map(|(i, j)| if m.is_active(i, j) { self.state.h.values[[i, j]] } else { 0.0 }).collect();
        self.grid(&flat)
    }

    /// Cell-centred velocity components as rows, the mean of opposite edges.
    fn velocity(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let (u1, u2) = cell_velocity(&self.state, &self.case.mesh);
        (self.grid(&u1), self.grid(&u2))
    }

    /// `(err_h, err_u)` against the exact solution, or `None`.
    fn error(&self) -> Option<(f64, f64)> {
        self.case.exact.as_ref().map(|ex| l1_error(&self.state, ex.as_ref(), &self.case.mesh, self.state.time))
    }

    fn write_vtk(&self, path: PathBuf) -> PyResult<()> {
        write_vtk(&path, &self.state, &self.case.z, &self.case.mesh).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("Simulation({}, {}x{}, {}, t={})", self.case.name, self.case.mesh.nx(), self.case.mesh.ny(), self.cfg.kind, self.state.time)
    }
}

/// Parses a configuration text and returns it in canonical `key: value` form.
#[pyfunction]
fn parse_config<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = parse_config_text(text).map_err(value_err)?;
    let d = PyDict::new(py);
    for line in cfg.to_text().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            d.set_item(k, v)?;
        }
    }
    Ok(d)
}

type Row = (usize, f64, Option<f64>, f64, Option<f64>);

/// Rows `(mesh, err_h, ord_h, err_u, ord_u)`.
#[pyfunction]
#[pyo3(signature = (case, scheme, meshes, g = None))]
fn convergence(case: &str, scheme: &str, meshes: Vec<usize>, g: Option<f64>) -> PyResult<Vec<Row>> {
    let name: CaseName = case.parse().map_err(value_err)?;
    let kind: SchemeKind = scheme.parse().map_err(value_err)?;
    let rows = run_convergence(name, kind, &meshes, g, |_| {}).map_err(value_err)?;
    Ok(rows.iter().map(|r| (r.cells, r.err_h, r.ord_h, r.err_u, r.ord_u)).collect())
}

/// Exact dam-break solution `(h, u)` at `(x, t)`.
#[pyfunction]
#[pyo3(signature = (x, t, h_left = 1.0, h_right = 0.2, g = 9.81, x0 = 0.5))]
fn riemann_exact(x: f64, t: f64, h_left: f64, h_right: f64, g: f64, x0: f64) -> PyResult<(f64, f64)> {
    let sol = RiemannSolution::solve(h_left, 0.0, h_right, 0.0, g, x0).map_err(value_err)?;
    Ok(sol.sample(x, t))
}

/// Runs the identity, lake-at-rest and positivity suites; returns pass flags.
#[pyfunction]
#[pyo3(signature = (seed = 7, states = 50))]
fn verify<'py>(py: Python<'py>, seed: u64, states: usize) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("identities", identity_suite(states, seed, 32).passes())?;
    d.set_item("lake_at_rest", lake_at_rest_suite(100, seed).map(|r| r.passes()).unwrap_or(false))?;
    d.set_item("positivity", positivity_suite(5 * states, seed, 32).passes())?;
    Ok(d)
}

#[pymodule]
fn macswe(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Simulation>()?;
    m.add_function(wrap_pyfunction!(parse_config, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    m.add_function(wrap_pyfunction!(riemann_exact, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("SCHEMES", SchemeKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>())?;
    m.add("CASES", CaseName::ALL.iter().map(|c| c.name()).collect::<Vec<_>>())?;
    Ok(())
}
