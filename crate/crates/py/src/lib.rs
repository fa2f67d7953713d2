//! Python bindings: thin wrappers over the cp-wald core crate.
//!
//! Errors surface as ValueError; reports come back as plain dicts so the
//! Python side needs no wrapper classes.

use cp_wald::farima::{FarimaParams, ParamSpace, SeriesBuffer, SimSpec};
use cp_wald::mc::{McDesign, NullDistribution};
use cp_wald::model::{ar_model, farima_model, ModelSpec};
use cp_wald::rng::Innovations;
use cp_wald::scan::ScanResult;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_innovations(name: &str) -> PyResult<Innovations> {
    match name {
        "normal" => Ok(Innovations::Normal),
        "centered-exponential" => Ok(Innovations::CenteredExponential),
        other => {
            if let Some(df) = other.strip_prefix("student-t:") {
                let df: f64 = df.parse().map_err(err)?;
                Ok(Innovations::StudentT { df })
            } else {
                Err(PyValueError::new_err(format!(
                    "unknown innovation family '{other}' (normal | student-t:DF | centered-exponential)"
                )))
            }
        }
    }
}

fn build_model(p: usize, q: usize, d_lower: f64, d_upper: f64) -> PyResult<ModelSpec> {
    let mut lower = vec![d_lower];
    let mut upper = vec![d_upper];
    lower.extend(std::iter::repeat(-0.95).take(p + q));
    upper.extend(std::iter::repeat(0.95).take(p + q));
    farima_model(ParamSpace::new(lower, upper).map_err(err)?, p, q).map_err(err)
}

/// Simulate a FARIMA(p, d, q) path.
#[pyfunction]
#[pyo3(signature = (d, n, seed, phi=None, psi=None, innovations="normal", stream=0))]
fn simulate(
    d: f64,
    n: usize,
    seed: u64,
    phi: Option<Vec<f64>>,
    psi: Option<Vec<f64>>,
    innovations: &str,
    stream: u64,
) -> PyResult<Vec<f64>> {
    let params =
        FarimaParams::new(d, phi.unwrap_or_default(), psi.unwrap_or_default()).map_err(err)?;
    let mut spec = SimSpec::new(params, n, seed);
    spec.stream = stream;
    spec.innovations = parse_innovations(innovations)?;
    Ok(cp_wald::farima::simulate_farima(&spec).map_err(err)?.values)
}

fn fit_dict<'py>(py: Python<'py>, r: &cp_wald::optim::FitResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("lambda_hat", r.lambda_hat.clone())?;
    d.set_item("objective", r.objective)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("converged", r.converged)?;
    d.set_item("boundary", r.boundary)?;
    Ok(d)
}

/// Fit a FARIMA model on a full series by conditional sum of squares.
#[pyfunction]
#[pyo3(signature = (values, p=0, q=0, d_lower=0.001, d_upper=0.499))]
fn fit<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    p: usize,
    q: usize,
    d_lower: f64,
    d_upper: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let series = SeriesBuffer::new(values).map_err(err)?;
    let model = build_model(p, q, d_lower, d_upper)?;
    let n = series.n();
    let r = cp_wald::optim::fit(&model, &series, (0, n), None).map_err(err)?;
    fit_dict(py, &r)
}

fn scan_dict<'py>(py: Python<'py>, r: &ScanResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n", r.n)?;
    d.set_item("m", r.m)?;
    d.set_item("k_star", r.k_star)?;
    d.set_item("w_max", r.w_max)?;
    d.set_item("w_hat", r.w_hat)?;
    d.set_item("p_value", r.p_value)?;
    d.set_item("a_n", r.norm.a_n)?;
    d.set_item("b_n", r.norm.b_n)?;
    let ks: Vec<usize> = r.rows.iter().map(|row| row.k).collect();
    let ws: Vec<Option<f64>> = r.rows.iter().map(|row| row.w).collect();
    d.set_item("k", ks)?;
    d.set_item("w", ws)?;
    Ok(d)
}

/// Scan a series for a single parameter change; returns the normalized
/// sup-Wald statistic, its p-value, and the per-split profile.
#[pyfunction]
#[pyo3(signature = (values, p=0, q=0, trim=None, d_lower=0.001, d_upper=0.499))]
fn scan<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    p: usize,
    q: usize,
    trim: Option<usize>,
    d_lower: f64,
    d_upper: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let series = SeriesBuffer::new(values).map_err(err)?;
    let model = build_model(p, q, d_lower, d_upper)?;
    let r = cp_wald::scan::scan(&model, &series, trim).map_err(err)?;
    scan_dict(py, &r)
}

/// Scan with a pure AR(p) model instead of FARIMA.
#[pyfunction]
#[pyo3(signature = (values, p=1, trim=None))]
fn scan_ar<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    p: usize,
    trim: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let series = SeriesBuffer::new(values).map_err(err)?;
    let space = ParamSpace::new(vec![-0.95; p], vec![0.95; p]).map_err(err)?;
    let model = ar_model(p, space).map_err(err)?;
    let r = cp_wald::scan::scan(&model, &series, trim).map_err(err)?;
    scan_dict(py, &r)
}

/// Normalizing pair (a_n, b_n) for series length n and parameter dimension m.
#[pyfunction]
fn norm_constants(n: usize, m: usize) -> PyResult<(f64, f64)> {
    let c = cp_wald::norm::norm_constants(n, m).map_err(err)?;
    Ok((c.a_n, c.b_n))
}

/// Asymptotic p-value of the normalized statistic.
#[pyfunction]
fn p_value(w: f64) -> f64 {
    cp_wald::norm::p_value(w)
}

/// Asymptotic critical value at level alpha.
#[pyfunction]
fn critical_value(alpha: f64) -> PyResult<f64> {
    cp_wald::norm::critical_value(alpha).map_err(err)
}

/// Null rejection-rate study for FARIMA(0, d0, 0).
#[pyfunction]
#[pyo3(signature = (n, reps, d0, seed))]
fn run_size<'py>(
    py: Python<'py>,
    n: usize,
    reps: usize,
    d0: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let design = McDesign::new(n, reps, d0, seed);
    let r = cp_wald::mc::run_size(&design).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("levels", r.levels)?;
    d.set_item("rates", r.rates)?;
    d.set_item("std_errors", r.std_errors)?;
    d.set_item("redraws", r.redraws)?;
    Ok(d)
}

/// Sorted null sample of the normalized statistic plus its KS distance to
/// the limit law.
#[pyfunction]
#[pyo3(signature = (n, reps, d0, seed))]
fn null_dist<'py>(
    py: Python<'py>,
    n: usize,
    reps: usize,
    d0: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let design = McDesign::new(n, reps, d0, seed);
    let r: NullDistribution = cp_wald::mc::null_distribution(&design).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("w_sorted", r.w_sorted)?;
    d.set_item("ks_distance", r.ks_distance)?;
    d.set_item("redraws", r.redraws)?;
    Ok(d)
}

#[pymodule]
fn cp_wald_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(scan_ar, m)?)?;
    m.add_function(wrap_pyfunction!(norm_constants, m)?)?;
    m.add_function(wrap_pyfunction!(p_value, m)?)?;
    m.add_function(wrap_pyfunction!(critical_value, m)?)?;
    m.add_function(wrap_pyfunction!(run_size, m)?)?;
    m.add_function(wrap_pyfunction!(null_dist, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
