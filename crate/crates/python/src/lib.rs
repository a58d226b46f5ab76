//! Python bindings. Matrices cross the boundary as lists of rows; missing
//! cells are `None` or NaN.

use nalgebra::DMatrix;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use robscatter_core::filter::FilterConfig;
use robscatter_core::lab::{lrt_distance as lrt, preset, run_campaign};
use robscatter_core::pipeline::{run_filter, two_step, PipelineConfig};
use robscatter_core::{Dataset, Error};

fn py_err(e: Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn dataset(rows: Vec<Vec<Option<f64>>>) -> PyResult<Dataset> {
    let rows: Vec<Vec<Option<f64>>> = rows
        .into_iter()
        .map(|r| r.into_iter().map(|v| v.filter(|x| !x.is_nan())).collect())
        .collect();
    Dataset::from_rows(&rows).map_err(py_err)
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let p = rows.len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(DMatrix::from_fn(p, p, |j, k| rows[j][k]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|j| m.row(j).iter().copied().collect()).collect()
}

#[allow(clippy::too_many_arguments)]
fn config(
    filter: &str,
    estimator: &str,
    init: &str,
    alpha_uni: f64,
    alpha_biv: f64,
    delta: f64,
    rocke_alpha: f64,
    subsamples: Option<usize>,
    subsample_size: Option<usize>,
    seed: u64,
) -> PyResult<PipelineConfig> {
    let filter_config = FilterConfig { alpha_uni, alpha_biv, delta, ..FilterConfig::default() };
    filter_config.validate().map_err(py_err)?;
    Ok(PipelineConfig {
        filter: filter.parse().map_err(py_err)?,
        filter_config,
        estimator: estimator.parse().map_err(py_err)?,
        init: init.parse().map_err(py_err)?,
        rocke_alpha,
        subsamples,
        subsample_size,
        seed,
        ..PipelineConfig::default()
    })
}

/// Filter the cells, then fit the S-estimator. Returns a dict with `mu`,
/// `sigma`, `weights`, `distances`, `flagged` (n x p booleans), `scale`,
/// `iterations`, `converged` and `warnings`.
#[pyfunction]
#[pyo3(signature = (x, filter="ubf", estimator="gre", init="emve-c", alpha_uni=0.95, alpha_biv=0.85, delta=0.10, rocke_alpha=0.05, subsamples=None, subsample_size=None, seed=0))]
#[allow(clippy::too_many_arguments)]
fn estimate<'py>(
    py: Python<'py>,
    x: Vec<Vec<Option<f64>>>,
    filter: &str,
    estimator: &str,
    init: &str,
    alpha_uni: f64,
    alpha_biv: f64,
    delta: f64,
    rocke_alpha: f64,
    subsamples: Option<usize>,
    subsample_size: Option<usize>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let data = dataset(x)?;
    let cfg = config(filter, estimator, init, alpha_uni, alpha_biv, delta, rocke_alpha, subsamples, subsample_size, seed)?;
    let r = py.detach(|| two_step(&data, &cfg)).map_err(py_err)?;
    let est = &r.estimate;
    let p = data.p();
    let sigma = DMatrix::from_fn(p, p, |j, k| est.sigma[(j.min(k), j.max(k))]);
    let flagged: Vec<Vec<bool>> = (0..data.n())
        .map(|i| (0..p).map(|j| data.mask().get(i, j) && !r.filter.mask.get(i, j)).collect())
        .collect();
    let out = PyDict::new(py);
    out.set_item("mu", est.mu.iter().copied().collect::<Vec<f64>>())?;
    out.set_item("sigma", to_rows(&sigma))?;
    out.set_item("weights", est.weights.clone())?;
    out.set_item("distances", r.full_distances.clone())?;
    out.set_item("flagged", flagged)?;
    out.set_item("scale", est.scale)?;
    out.set_item("iterations", est.iterations)?;
    out.set_item("converged", est.converged)?;
    out.set_item("warnings", r.warnings.clone())?;
    Ok(out)
}

/// Run only the filter. Returns n x p booleans, true where a cell was removed.
#[pyfunction]
#[pyo3(signature = (x, filter="ubf", alpha_uni=0.95, alpha_biv=0.85, delta=0.10))]
fn filter_cells(py: Python<'_>, x: Vec<Vec<Option<f64>>>, filter: &str, alpha_uni: f64, alpha_biv: f64, delta: f64) -> PyResult<Vec<Vec<bool>>> {
    let data = dataset(x)?;
    let cfg = config(filter, "gre", "emve-c", alpha_uni, alpha_biv, delta, 0.05, None, None, 0)?;
    let r = py.detach(|| run_filter(&data, &cfg)).map_err(py_err)?;
    Ok((0..data.n())
        .map(|i| (0..data.p()).map(|j| data.mask().get(i, j) && !r.mask.get(i, j)).collect())
        .collect())
}

/// Likelihood-ratio discrepancy of `sigma` from `sigma0`.
#[pyfunction]
fn lrt_distance(sigma: Vec<Vec<f64>>, sigma0: Vec<Vec<f64>>) -> PyResult<f64> {
    lrt(&matrix(&sigma)?, &matrix(&sigma0)?).map_err(py_err)
}

/// Run a preset simulation campaign. Returns one dict per (estimator, eps, k).
#[pyfunction]
#[pyo3(signature = (name, replicates=None, seed=None, estimators=None))]
fn simulate<'py>(
    py: Python<'py>,
    name: &str,
    replicates: Option<usize>,
    seed: Option<u64>,
    estimators: Option<Vec<String>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut cfg = preset(name).map_err(py_err)?;
    if let Some(r) = replicates {
        cfg.replicates = r;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(list) = estimators {
        cfg.estimators = list.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(py_err)?;
    }
    cfg.validate().map_err(py_err)?;
    let result = py.detach(|| run_campaign(&cfg)).map_err(py_err)?;
    result
        .rows
        .iter()
        .map(|row| {
            let d = PyDict::new(py);
            d.set_item("estimator", &row.estimator)?;
            d.set_item("eps", row.eps)?;
            d.set_item("k", row.k)?;
            d.set_item("mean_lrt", row.mean_lrt)?;
            d.set_item("se", row.se)?;
            d.set_item("failed", row.failed)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn robscatter(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(filter_cells, m)?)?;
    m.add_function(wrap_pyfunction!(lrt_distance, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
