//! Python module `pysphere_cq`.
//!
//! Points are plain lists of floats. Plane indices are 0-based, as in the
//! Rust API.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sphere_cq::config::RunConfig;
use sphere_cq::{
    AmbientVector, Halfspace, Mapping, MappingFamily, Method, PlaneRotation, StopRule,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn point(coords: Vec<f64>) -> PyResult<sphere_cq::SpherePoint> {
    sphere_cq::SpherePoint::new(coords).map_err(value_err)
}

/// Geodesic distance `arccos <x, y>` between unit vectors.
#[pyfunction]
fn distance(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    Ok(sphere_cq::distance(&point(x)?, &point(y)?))
}

/// The point on the geodesic from `x` to `y` at distance `alpha d(x, y)` from `y`.
#[pyfunction]
fn geodesic_combine(alpha: f64, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
    let z = sphere_cq::geodesic_combine(alpha, &point(x)?, &point(y)?).map_err(value_err)?;
    Ok(z.coords().to_vec())
}

#[pyfunction]
fn pal_inequality_gap(t: f64, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> PyResult<f64> {
    sphere_cq::pal_inequality_gap(t, &point(x)?, &point(y)?, &point(z)?).map_err(value_err)
}

#[pyfunction]
fn random_point_in_cap(pole: Vec<f64>, radius: f64, seed: u64) -> PyResult<Vec<f64>> {
    Ok(sphere_cq::random_point_in_cap(&point(pole)?, radius, seed)
        .coords()
        .to_vec())
}

/// Nearest point of the great circle in the coordinate plane `(i, j)`.
#[pyfunction]
fn circle_project(x: Vec<f64>, i: usize, j: usize) -> PyResult<Vec<f64>> {
    let p = sphere_cq::circle_project(&point(x)?, (i, j)).map_err(value_err)?;
    Ok(p.coords().to_vec())
}

#[pyclass(frozen)]
struct Cap {
    inner: sphere_cq::Cap,
}

#[pymethods]
impl Cap {
    #[new]
    fn new(pole: Vec<f64>, radius: f64) -> PyResult<Self> {
        let inner = sphere_cq::Cap::new(point(pole)?, radius).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn pole(&self) -> Vec<f64> {
        self.inner.pole().coords().to_vec()
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.inner.radius()
    }

    #[pyo3(signature = (z, tol = 0.0))]
    fn contains(&self, z: Vec<f64>, tol: f64) -> PyResult<bool> {
        Ok(self.inner.contains(&point(z)?, tol))
    }
}

/// A cap cut by homogeneous halfspaces `<a, z> >= 0`.
#[pyclass(frozen)]
struct Region {
    inner: sphere_cq::Region,
}

#[pymethods]
impl Region {
    #[new]
    #[pyo3(signature = (cap, normals = Vec::new(), witness = None))]
    fn new(cap: &Cap, normals: Vec<Vec<f64>>, witness: Option<Vec<f64>>) -> PyResult<Self> {
        let linear = normals
            .into_iter()
            .map(|a| AmbientVector::new(a).map(Halfspace::homogeneous))
            .collect::<Result<Vec<_>, _>>()
            .map_err(value_err)?;
        let witness = match witness {
            Some(w) => point(w)?,
            None => cap.inner.pole().clone(),
        };
        let inner = sphere_cq::Region::new(cap.inner.clone(), linear, witness).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[pyo3(signature = (z, tol = 0.0))]
    fn contains(&self, z: Vec<f64>, tol: f64) -> PyResult<bool> {
        Ok(self.inner.contains(&point(z)?, tol))
    }

    /// Nearest point of the region to `x`.
    fn project(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let (p, _) = self.inner.project(&point(x)?).map_err(value_err)?;
        Ok(p.coords().to_vec())
    }
}

#[pyclass(frozen, get_all)]
struct RunResult {
    method: String,
    stop_reason: String,
    iterations: usize,
    final_point: Vec<f64>,
    final_residuals: Vec<f64>,
    dist_to_known_pf: Option<f64>,
    /// Rows `(n, dist_x1_xn, step_len, residuals, constraint_count, solver_sweeps)`.
    trace: Vec<(usize, f64, f64, Vec<f64>, usize, usize)>,
}

#[pymethods]
impl RunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(method={:?}, stop_reason={:?}, iterations={})",
            self.method, self.stop_reason, self.iterations
        )
    }
}

#[pyclass(frozen)]
struct Problem {
    inner: sphere_cq::Problem,
}

#[pymethods]
impl Problem {
    /// `rotations` are `(i, j, angle)` with 0-based planes; `alphas`
    /// defaults to 1/2 per map with bound `a = 1/4`; `x1` defaults to a
    /// point of the cap drawn with `seed`.
    #[new]
    #[pyo3(signature = (pole, radius, rotations, alphas = None, alpha_lower = 0.25, x1 = None, seed = 0))]
    fn new(
        pole: Vec<f64>,
        radius: f64,
        rotations: Vec<(usize, usize, f64)>,
        alphas: Option<Vec<f64>>,
        alpha_lower: f64,
        x1: Option<Vec<f64>>,
        seed: u64,
    ) -> PyResult<Self> {
        let cap = sphere_cq::Cap::new(point(pole)?, radius).map_err(value_err)?;
        let maps = rotations
            .into_iter()
            .map(|(i, j, a)| PlaneRotation::new(i, j, a).map(Mapping::Rotation))
            .collect::<Result<Vec<_>, _>>()
            .map_err(value_err)?;
        let alphas = alphas.unwrap_or_else(|| vec![0.5; maps.len()]);
        let family = MappingFamily::new(
            maps,
            sphere_cq::AlphaSchedule::Constant(alphas),
            alpha_lower,
            &cap,
        )
        .map_err(value_err)?;
        let x1 = match x1 {
            Some(x) => point(x)?,
            None => sphere_cq::random_point_in_cap(cap.pole(), cap.radius(), seed),
        };
        let p = sphere_cq::Problem::new(cap, family, x1).map_err(value_err)?;
        let inner = p.clone().with_computed_fixed_set().unwrap_or(p);
        Ok(Self { inner })
    }

    /// Builds the problem from config-file text.
    #[staticmethod]
    #[pyo3(signature = (text, seed = None))]
    fn from_config(text: &str, seed: Option<u64>) -> PyResult<Self> {
        let cfg = RunConfig::parse(text).map_err(value_err)?;
        let inner = cfg.problem(seed.unwrap_or(cfg.seed)).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn x1(&self) -> Vec<f64> {
        self.inner.x1().coords().to_vec()
    }

    /// Nearest common fixed point to `x1`, when the fixed set is known.
    #[getter]
    fn known_projection(&self) -> Option<Vec<f64>> {
        self.inner.known_projection().map(|p| p.coords().to_vec())
    }

    /// Runs `method` ("cq" or "shrinking"); releases the GIL meanwhile.
    #[pyo3(signature = (method, eps_step = 1e-8, eps_residual = 1e-8, max_iter = 10_000))]
    fn run(
        &self,
        py: Python<'_>,
        method: &str,
        eps_step: f64,
        eps_residual: f64,
        max_iter: usize,
    ) -> PyResult<RunResult> {
        let method: Method = method.parse().map_err(PyValueError::new_err)?;
        let stop = StopRule {
            eps_step,
            eps_residual,
            max_iter,
        };
        let p = &self.inner;
        let (outcome, summary) = py
            .detach(|| {
                let outcome = sphere_cq::run(p, method, &stop)?;
                let summary = sphere_cq::cli::summarize(p, method, &outcome)?;
                Ok::<_, sphere_cq::Error>((outcome, summary))
            })
            .map_err(value_err)?;
        Ok(RunResult {
            method: method.to_string(),
            stop_reason: outcome.stop_reason.to_string(),
            iterations: summary.iterations,
            final_point: summary.final_point,
            final_residuals: summary.final_residuals,
            dist_to_known_pf: summary.dist_to_known_pf,
            trace: outcome
                .trace
                .into_iter()
                .map(|t| {
                    (
                        t.n,
                        t.dist_x1_xn,
                        t.step_len,
                        t.residuals,
                        t.constraint_count,
                        t.solver_sweeps,
                    )
                })
                .collect(),
        })
    }
}

#[pymodule]
fn pysphere_cq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(geodesic_combine, m)?)?;
    m.add_function(wrap_pyfunction!(pal_inequality_gap, m)?)?;
    m.add_function(wrap_pyfunction!(random_point_in_cap, m)?)?;
    m.add_function(wrap_pyfunction!(circle_project, m)?)?;
    m.add_class::<Cap>()?;
    m.add_class::<Region>()?;
    m.add_class::<Problem>()?;
    m.add_class::<RunResult>()?;
    Ok(())
}
