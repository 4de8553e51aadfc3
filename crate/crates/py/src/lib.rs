//! Python module `cocycle_lab`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use lab::base::{BaseSystem, RotationNumber, DEFAULT_GRID};
use lab::cocycle::{self, Generator, UhOptions};
use lab::sl2;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts a serializable record to plain Python objects.
fn to_py(py: Python<'_>, value: &impl Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn base_system(kind: &str, grid: usize) -> PyResult<BaseSystem> {
    let sys = match kind {
        "golden" => BaseSystem::golden(),
        "silver" => BaseSystem::silver(),
        other => {
            let alpha: f64 = other.parse().map_err(|_| value_error(format!("unknown base `{other}`")))?;
            BaseSystem::circle(RotationNumber::float(alpha).map_err(value_error)?)
        }
    };
    Ok(sys.with_grid(grid))
}

/// Element of SL(2, R).
#[pyclass(frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct Mat2 {
    inner: sl2::Mat2,
}

#[pymethods]
impl Mat2 {
    #[new]
    fn new(a: f64, b: f64, c: f64, d: f64) -> PyResult<Mat2> {
        Ok(Mat2 { inner: sl2::Mat2::new(a, b, c, d).map_err(value_error)? })
    }

    #[staticmethod]
    fn rotation(theta: f64) -> Mat2 {
        Mat2 { inner: sl2::rotation(theta) }
    }

    #[staticmethod]
    fn diag(s: f64) -> Mat2 {
        Mat2 { inner: sl2::Mat2::diag(s) }
    }

    fn entries(&self) -> [f64; 4] {
        self.inner.entries()
    }

    fn det(&self) -> f64 {
        self.inner.det()
    }

    fn trace(&self) -> f64 {
        self.inner.trace()
    }

    fn norm(&self) -> f64 {
        sl2::operator_norm(&self.inner)
    }

    fn inverse(&self) -> Mat2 {
        Mat2 { inner: self.inner.inverse() }
    }

    fn distance(&self, other: &Mat2) -> f64 {
        self.inner.distance(&other.inner)
    }

    /// `(u, s, norm)` with `u` the expanding and `s` the contracting unit vector.
    fn singular_axes(&self) -> PyResult<([f64; 2], [f64; 2], f64)> {
        let axes = sl2::singular_axes(&self.inner).map_err(value_error)?;
        Ok((axes.u, axes.s, axes.norm))
    }

    /// Traceless logarithm `(p, q, r)` of `[[p, q], [r, -p]]`.
    fn log(&self) -> PyResult<(f64, f64, f64)> {
        let v = sl2::log_map(&self.inner).map_err(value_error)?;
        Ok((v.p, v.q, v.r))
    }

    #[staticmethod]
    fn exp(p: f64, q: f64, r: f64) -> Mat2 {
        Mat2 { inner: sl2::exp_map(&sl2::TangentVec { p, q, r }) }
    }

    fn __mul__(&self, other: &Mat2) -> Mat2 {
        Mat2 { inner: self.inner * other.inner }
    }

    fn __repr__(&self) -> String {
        let [a, b, c, d] = self.inner.entries();
        format!("Mat2([[{a}, {b}], [{c}, {d}]])")
    }
}

/// A cocycle over a circle rotation. `base` is `"golden"`, `"silver"` or a rotation number.
#[pyclass(frozen)]
pub struct Cocycle {
    inner: cocycle::Cocycle,
}

impl Cocycle {
    fn build(base: &str, grid: usize, generator: Generator) -> PyResult<Cocycle> {
        Ok(Cocycle { inner: cocycle::Cocycle::new(base_system(base, grid)?, generator).map_err(value_error)? })
    }
}

#[pymethods]
impl Cocycle {
    #[staticmethod]
    #[pyo3(signature = (energy, coupling, base = "golden", grid = DEFAULT_GRID))]
    fn schrodinger(energy: f64, coupling: f64, base: &str, grid: usize) -> PyResult<Cocycle> {
        Cocycle::build(base, grid, Generator::Schrodinger { energy, coupling })
    }

    #[staticmethod]
    #[pyo3(signature = (offset, winding, base = "golden", grid = DEFAULT_GRID))]
    fn rotation(offset: f64, winding: i64, base: &str, grid: usize) -> PyResult<Cocycle> {
        Cocycle::build(base, grid, Generator::Rotation { offset, winding })
    }

    #[staticmethod]
    #[pyo3(signature = (matrix, base = "golden", grid = DEFAULT_GRID))]
    fn constant(matrix: &Mat2, base: &str, grid: usize) -> PyResult<Cocycle> {
        Cocycle::build(base, grid, Generator::Constant(matrix.inner))
    }

    #[staticmethod]
    #[pyo3(signature = (sigma, winding, base = "golden", grid = DEFAULT_GRID))]
    fn herman(sigma: f64, winding: i64, base: &str, grid: usize) -> PyResult<Cocycle> {
        Cocycle::build(base, grid, Generator::Herman { sigma, winding })
    }

    fn name(&self) -> String {
        self.inner.generator().name()
    }

    fn value(&self, x: f64) -> Mat2 {
        Mat2 { inner: self.inner.value(&self.inner.base().point(x)) }
    }

    fn log_norm(&self, x: f64, n: usize) -> f64 {
        self.inner.log_norm_of_product(&self.inner.base().point(x), n)
    }

    fn lyapunov_estimate(&self, x: f64, n: usize) -> f64 {
        self.inner.lyapunov_estimate(&self.inner.base().point(x), n)
    }

    fn growth_report(&self, py: Python<'_>, n: usize) -> PyResult<Py<PyAny>> {
        to_py(py, &py.detach(|| self.inner.growth_report(n)))
    }

    /// `(pass, max)` of the uniform growth test.
    fn uniform_growth_test(&self, py: Python<'_>, eps: f64, n: usize) -> (bool, f64) {
        let (pass, report) = py.detach(|| self.inner.uniform_growth_test(eps, n));
        (pass, report.max)
    }

    fn uh_certify(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &py.detach(|| self.inner.uh_certify(&UhOptions::default())))
    }

    #[pyo3(signature = (x, v, w, eps, m_max = 1000))]
    fn steer(&self, py: Python<'_>, x: f64, v: [f64; 2], w: [f64; 2], eps: f64, m_max: usize) -> PyResult<Py<PyAny>> {
        let p = self.inner.base().point(x);
        let block = lab::perturb::steer_direction(&self.inner, &p, v, w, eps, m_max).map_err(value_error)?;
        to_py(py, &block)
    }

    /// Plans and verifies perturbed segments from each anchor.
    fn plan_segments(&self, py: Python<'_>, eps: f64, anchors: Vec<f64>) -> PyResult<Py<PyAny>> {
        let (batch, _) = py.detach(|| lab::perturb::plan_batch(&self.inner, eps, &anchors)).map_err(value_error)?;
        to_py(py, &batch)
    }

    /// Runs the whole perturbation pipeline and returns the growth certificate.
    fn surgery(&self, py: Python<'_>, eps: f64) -> PyResult<Py<PyAny>> {
        let run = py.detach(|| lab::surgery::run_surgery(&self.inner, eps)).map_err(value_error)?;
        to_py(py, &run.certificate)
    }
}

#[pyfunction]
fn frobenius_threshold(height: usize) -> usize {
    lab::towers::frobenius_threshold(height)
}

/// `(short, tall)` with `n = short·height + tall·(height + 1)`.
#[pyfunction]
fn decompose_height(n: usize, height: usize) -> PyResult<(usize, usize)> {
    lab::towers::decompose_height(n, height).map_err(value_error)
}

/// Castle summary with tower heights and the exact checks.
#[pyfunction]
#[pyo3(signature = (height, base = "golden", samples = 10_000))]
fn build_castle(py: Python<'_>, height: usize, base: &str, samples: usize) -> PyResult<Py<PyAny>> {
    let sys = base_system(base, DEFAULT_GRID)?;
    let castle = lab::towers::build_castle(&sys, height).map_err(value_error)?;
    let check = castle.check(&sys).map_err(value_error)?;
    let returns = castle.sampled_returns(&sys, samples).map_err(value_error)?;
    let heights: Vec<usize> = castle.towers.iter().map(|t| t.height).collect();
    to_py(py, &serde_json::json!({ "heights": heights, "check": check, "pass": check.pass(), "sampled_returns": returns }))
}

#[pyfunction]
#[pyo3(signature = (points, eps, base = "golden", grid = DEFAULT_GRID))]
fn visit_freq_bound(py: Python<'_>, points: Vec<f64>, eps: f64, base: &str, grid: usize) -> PyResult<Py<PyAny>> {
    let sys = base_system(base, grid)?;
    to_py(py, &lab::towers::visit_freq_bound(&sys, &points, eps).map_err(value_error)?)
}

/// Degree of a closed loop of line directions sampled uniformly.
#[pyfunction]
fn winding_number(angles: Vec<f64>) -> PyResult<i64> {
    let field = lab::scenarios::DirectionField::from_fn(angles.len(), |_| 0.0);
    let field = lab::scenarios::DirectionField { angles, ..field };
    lab::scenarios::winding_number(&field).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (alpha, grid = DEFAULT_GRID))]
fn hopf_report(py: Python<'_>, alpha: f64, grid: usize) -> PyResult<Py<PyAny>> {
    let (report, _) = py.detach(|| lab::scenarios::hopf_report(alpha, grid)).map_err(value_error)?;
    to_py(py, &report)
}

#[pymodule]
fn cocycle_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Mat2>()?;
    m.add_class::<Cocycle>()?;
    m.add_function(wrap_pyfunction!(frobenius_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(decompose_height, m)?)?;
    m.add_function(wrap_pyfunction!(build_castle, m)?)?;
    m.add_function(wrap_pyfunction!(visit_freq_bound, m)?)?;
    m.add_function(wrap_pyfunction!(winding_number, m)?)?;
    m.add_function(wrap_pyfunction!(hopf_report, m)?)?;
    Ok(())
}
