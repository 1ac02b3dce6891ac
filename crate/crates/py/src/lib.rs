use std::cell::RefCell;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use omega_core::operators::{self, default_k_max, eigen_spectrum, hs_norm_direct, nystrom_discretize};
use omega_core::quadrature::{self, QuadratureResult};
use omega_core::weighted_measure::{self, RadialFunction, SampledFunction};
use omega_core::{regulator, rg_flow, Error, KernelSpec, Suppression};

create_exception!(
    omega_reg,
    RefusedError,
    PyException,
    "Quantity refused before any numerics ran."
);
create_exception!(
    omega_reg,
    DivergentError,
    RefusedError,
    "Integral or norm is known to diverge."
);
create_exception!(
    omega_reg,
    IllDefinedGaussianError,
    RefusedError,
    "1 - Omega is not positive somewhere."
);
create_exception!(
    omega_reg,
    NumericalError,
    PyException,
    "Quadrature or linear algebra failed."
);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Domain { .. } | Error::Usage { .. } => PyValueError::new_err(msg),
        Error::Divergent { .. } => DivergentError::new_err(msg),
        Error::IllDefinedGaussian { .. } => IllDefinedGaussianError::new_err(msg),
        _ => NumericalError::new_err(msg),
    }
}

#[pyclass(name = "RegulatorParams", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyParams(regulator::RegulatorParams);

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (beta=1.0, eta=0.0, alpha_eps=2.0, k_c=1.0, lambda_=1.0, dim=1))]
    fn new(beta: f64, eta: f64, alpha_eps: f64, k_c: f64, lambda_: f64, dim: u32) -> PyResult<Self> {
        regulator::RegulatorParams::new(beta, eta, alpha_eps, k_c, lambda_, dim)
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.0.eta()
    }

    #[getter]
    fn alpha_eps(&self) -> f64 {
        self.0.alpha_eps()
    }

    #[getter]
    fn k_c(&self) -> f64 {
        self.0.k_c()
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda()
    }

    #[getter]
    fn dim(&self) -> u32 {
        self.0.dim()
    }

    fn with_lambda(&self, lambda_: f64) -> PyResult<Self> {
        self.0.with_lambda(lambda_).map(Self).map_err(to_py)
    }

    fn omega(&self, k: f64) -> f64 {
        regulator::omega_eval(k, &self.0)
    }

    fn epsilon(&self, k: f64) -> PyResult<f64> {
        regulator::epsilon_eval(k * k, &self.0).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "RegulatorParams(beta={}, eta={}, alpha_eps={}, k_c={}, lambda_={}, dim={})",
            p.beta(),
            p.eta(),
            p.alpha_eps(),
            p.k_c(),
            p.lambda(),
            p.dim()
        )
    }
}

fn quad_dict<'py>(py: Python<'py>, r: &QuadratureResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", r.value)?;
    d.set_item("abs_error", r.abs_error_estimate)?;
    d.set_item("subdivisions", r.subdivisions)?;
    d.set_item("converged", r.converged)?;
    Ok(d)
}

#[pyfunction]
fn omega_eval(k: f64, params: PyParams) -> f64 {
    regulator::omega_eval(k, &params.0)
}

#[pyfunction]
fn omega_uv_asymptote(k: f64, params: PyParams) -> PyResult<f64> {
    regulator::omega_uv_asymptote(k, &params.0).map_err(to_py)
}

/// (holds, worst_k, margin) on k = 0 plus `points` log-spaced momenta.
#[pyfunction]
#[pyo3(signature = (params, points=10_000))]
fn check_admissibility(params: PyParams, points: usize) -> PyResult<(bool, f64, f64)> {
    let grid = regulator::default_admissibility_grid(&params.0, points);
    let r = regulator::check_admissibility(&params.0, &grid).map_err(to_py)?;
    Ok((r.holds, r.worst_k, r.margin))
}

/// (status, deciding_inequality, margin).
#[pyfunction]
#[pyo3(signature = (params, alpha_growth=0.0))]
fn classify_convergence(params: PyParams, alpha_growth: f64) -> (String, String, f64) {
    let v = quadrature::classify_convergence(params.0.dim(), alpha_growth, &params.0);
    (v.status.to_string(), v.deciding_inequality, v.margin)
}

/// Integral over R^dim of a radial Python callable f(k).
#[pyfunction]
#[pyo3(signature = (f, dim, tol=1e-10))]
fn integrate_radial<'py>(py: Python<'py>, f: Bound<'py, PyAny>, dim: u32, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let failure: RefCell<Option<PyErr>> = RefCell::new(None);
    let g = |k: f64| match f.call1((k,)).and_then(|v| v.extract::<f64>()) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let r = quadrature::integrate_radial(g, dim, tol);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    quad_dict(py, &r.map_err(to_py)?)
}

#[pyfunction]
#[pyo3(signature = (params, alpha_growth=0.0, tol=1e-10))]
fn regulated_loop_integral<'py>(
    py: Python<'py>,
    params: PyParams,
    alpha_growth: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = quadrature::regulated_loop_integral(alpha_growth, &params.0, tol).map_err(to_py)?;
    quad_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (params, tol=1e-10))]
fn total_mass<'py>(py: Python<'py>, params: PyParams, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = weighted_measure::total_mass(&params.0, tol).map_err(to_py)?;
    quad_dict(py, &r)
}

fn weight_of(params: Option<PyParams>, dim: u32) -> Suppression {
    params.map_or(Suppression::Unit { dim }, |p| p.0.into())
}

/// Weighted L^p norm of a Gaussian bump a exp(-((k - c)/w)^2). With no
/// params the weight is 1 on R^dim.
#[pyfunction]
#[pyo3(signature = (amplitude, center, width, p=2.0, params=None, dim=1, tol=1e-10))]
fn gaussian_bump_norm(
    amplitude: f64,
    center: f64,
    width: f64,
    p: f64,
    params: Option<PyParams>,
    dim: u32,
    tol: f64,
) -> PyResult<f64> {
    let f = RadialFunction::gaussian(amplitude, center, width).map_err(to_py)?;
    weighted_measure::weighted_lp_norm(&f, p, &weight_of(params, dim), tol).map_err(to_py)
}

/// Weighted L^p norm of a monotone-cubic interpolant through (nodes, values).
#[pyfunction]
#[pyo3(signature = (nodes, values, p=2.0, params=None, dim=1, tail_exponent=None, tol=1e-10))]
#[allow(clippy::too_many_arguments)]
fn sampled_norm(
    nodes: Vec<f64>,
    values: Vec<f64>,
    p: f64,
    params: Option<PyParams>,
    dim: u32,
    tail_exponent: Option<f64>,
    tol: f64,
) -> PyResult<f64> {
    let f = SampledFunction::new(nodes, values, tail_exponent, "python").map_err(to_py)?;
    weighted_measure::weighted_lp_norm(&RadialFunction::Sampled(f), p, &weight_of(params, dim), tol).map_err(to_py)
}

fn kernel(alpha_kernel: f64, gamma: Option<f64>, params: Option<PyParams>) -> PyResult<KernelSpec> {
    let weight = match (gamma, params) {
        (Some(g), None) => Suppression::Gaussian { gamma: g, dim: 1 },
        (None, Some(p)) => p.0.into(),
        _ => return Err(PyValueError::new_err("pass exactly one of gamma= or params=")),
    };
    KernelSpec::new(alpha_kernel, weight).map_err(to_py)
}

/// Squared Hilbert-Schmidt norm of Omega(k) Omega(k') / |k - k'|^alpha on R.
#[pyfunction]
#[pyo3(signature = (alpha_kernel, gamma=None, params=None, tol=1e-10))]
fn hs_norm_squared(alpha_kernel: f64, gamma: Option<f64>, params: Option<PyParams>, tol: f64) -> PyResult<f64> {
    let k = kernel(alpha_kernel, gamma, params)?;
    hs_norm_direct(&k, tol).map(|r| r.value).map_err(to_py)
}

/// Eigenvalues of the n-point Nystrom matrix, largest magnitude first.
#[pyfunction]
#[pyo3(signature = (alpha_kernel, n, gamma=None, params=None, k_max=None))]
fn nystrom_spectrum(
    alpha_kernel: f64,
    n: usize,
    gamma: Option<f64>,
    params: Option<PyParams>,
    k_max: Option<f64>,
) -> PyResult<Vec<f64>> {
    let k = kernel(alpha_kernel, gamma, params)?;
    let k_max = match k_max {
        Some(v) => v,
        None => default_k_max(&k.weight).map_err(to_py)?,
    };
    let m = nystrom_discretize(&k, n, k_max).map_err(to_py)?;
    Ok(eigen_spectrum(&m).map_err(to_py)?.eigenvalues)
}

/// (k_star, lambda_max) of k^2 exp(-gamma k^2).
#[pyfunction]
fn spectral_gap(gamma: f64) -> PyResult<(f64, f64)> {
    let g = operators::spectral_gap(gamma).map_err(to_py)?;
    Ok((g.k_star, g.lambda_max))
}

/// Lambda dOmega/dLambda.
#[pyfunction]
fn domega_dlog_lambda(k: f64, params: PyParams) -> f64 {
    rg_flow::domega_dlambda_analytic(k, &params.0)
}

/// The closed form as printed, kept for comparison with the analytic one.
#[pyfunction]
fn domega_dlog_lambda_printed(k: f64, params: PyParams) -> f64 {
    rg_flow::domega_dlambda_printed(k, &params.0)
}

#[pyfunction]
fn ricci_flow_eval(k: f64, params: PyParams) -> PyResult<f64> {
    rg_flow::ricci_flow_eval(k, &params.0).map_err(to_py)
}

/// [(lambda, omega, dOmega/dlnLambda, ricci_proxy or None)] plus the
/// relative endpoint consistency error.
#[pyfunction]
#[pyo3(signature = (k, params, lambda_start=0.1, lambda_end=10.0, steps=1000))]
#[allow(clippy::type_complexity)]
fn flow_trajectory(
    k: f64,
    params: PyParams,
    lambda_start: f64,
    lambda_end: f64,
    steps: usize,
) -> PyResult<(Vec<(f64, f64, f64, Option<f64>)>, f64)> {
    let t = rg_flow::flow_trajectory(k, &params.0, lambda_start, lambda_end, steps).map_err(to_py)?;
    let rows = t
        .samples
        .iter()
        .map(|s| (s.lambda, s.omega, s.domega_dlog_lambda, s.ricci_proxy))
        .collect();
    Ok((rows, t.consistency_error))
}

#[pyfunction]
#[pyo3(signature = (params, uv_cutoff=10.0, tol=1e-10))]
fn log_partition<'py>(py: Python<'py>, params: PyParams, uv_cutoff: f64, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = rg_flow::log_partition(&params.0, uv_cutoff, tol).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("ln_z", r.ln_z)?;
    d.set_item("ln_z_density", r.ln_z_density)?;
    d.set_item("uv_cutoff", r.uv_cutoff)?;
    d.set_item("integrand_min_argument", r.integrand_min_argument)?;
    d.set_item("abs_error", r.abs_error_estimate)?;
    Ok(d)
}

#[pyfunction]
fn log_partition_integrand(k: f64, params: PyParams) -> f64 {
    rg_flow::log_partition_integrand(k, &params.0)
}

#[pymodule]
fn omega_reg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyParams>()?;
    m.add("RefusedError", py.get_type::<RefusedError>())?;
    m.add("DivergentError", py.get_type::<DivergentError>())?;
    m.add("IllDefinedGaussianError", py.get_type::<IllDefinedGaussianError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(omega_eval, m)?)?;
    m.add_function(wrap_pyfunction!(omega_uv_asymptote, m)?)?;
    m.add_function(wrap_pyfunction!(check_admissibility, m)?)?;
    m.add_function(wrap_pyfunction!(classify_convergence, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_radial, m)?)?;
    m.add_function(wrap_pyfunction!(regulated_loop_integral, m)?)?;
    m.add_function(wrap_pyfunction!(total_mass, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_bump_norm, m)?)?;
    m.add_function(wrap_pyfunction!(sampled_norm, m)?)?;
    m.add_function(wrap_pyfunction!(hs_norm_squared, m)?)?;
    m.add_function(wrap_pyfunction!(nystrom_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_gap, m)?)?;
    m.add_function(wrap_pyfunction!(domega_dlog_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(domega_dlog_lambda_printed, m)?)?;
    m.add_function(wrap_pyfunction!(ricci_flow_eval, m)?)?;
    m.add_function(wrap_pyfunction!(flow_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(log_partition, m)?)?;
    m.add_function(wrap_pyfunction!(log_partition_integrand, m)?)?;
    Ok(())
}
