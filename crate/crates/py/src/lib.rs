//! Python bindings. Matrices are lists of rows and order-3 tensors are lists
//! of `K` matrices, all of floats.

use std::collections::HashMap;
use std::path::Path;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use teon::diagnostics::top_singular_alignment;
use teon::harness::{self, RunConfig};
use teon::linalg::{self, Matrix, Mode, Tensor3};
use teon::norms::{self, NormFamily, NormKind};
use teon::optim::{self, MomentumStyle, UpdatePolicy};
use teon::ortho::{self, NsSchedule, OrthoScheme};
use teon::TeonError;

type Rows = Vec<Vec<f64>>;
type Slices = Vec<Rows>;

fn py_err(e: TeonError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: &Rows) -> PyResult<Matrix> {
    Matrix::from_rows(rows).map_err(py_err)
}

fn to_tensor(slices: &Slices) -> PyResult<Tensor3> {
    let mats = slices.iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
    Tensor3::from_slices(mats).map_err(py_err)
}

fn from_tensor(t: &Tensor3) -> Slices {
    t.slices().iter().map(Matrix::to_rows).collect()
}

fn to_mode(mode: u8) -> PyResult<Mode> {
    Mode::try_from(mode).map_err(py_err)
}

fn to_family(family: &str) -> PyResult<NormFamily> {
    match family {
        "muon" => Ok(NormFamily::Muon),
        "teon1" => Ok(NormFamily::Teon(Mode::One)),
        "teon2" => Ok(NormFamily::Teon(Mode::Two)),
        "teon3" => Ok(NormFamily::Teon(Mode::Three)),
        other => Err(PyValueError::new_err(format!(
            "unknown norm family `{other}` (muon, teon1, teon2, teon3)"
        ))),
    }
}

fn to_scheme(scheme: &str, preset: &str, steps: usize) -> PyResult<OrthoScheme> {
    match scheme {
        "exact" => Ok(OrthoScheme::ExactSvd),
        "newton_schulz" => Ok(OrthoScheme::NewtonSchulz(NsSchedule::preset(preset, steps).map_err(py_err)?)),
        other => Err(PyValueError::new_err(format!("unknown scheme `{other}` (exact, newton_schulz)"))),
    }
}

fn to_style(style: &str) -> PyResult<MomentumStyle> {
    match style {
        "accumulate" => Ok(MomentumStyle::Accumulate),
        "ema" => Ok(MomentumStyle::Ema),
        other => Err(PyValueError::new_err(format!("unknown momentum style `{other}` (accumulate, ema)"))),
    }
}

/// Mode-`mode` unfolding of a tensor.
#[pyfunction]
fn matricize(t: Slices, mode: u8) -> PyResult<Rows> {
    Ok(linalg::matricize(&to_tensor(&t)?, to_mode(mode)?).to_rows())
}

/// Inverse of `matricize` for a tensor of shape `(m, n, k)`.
#[pyfunction]
fn fold(x: Rows, mode: u8, shape: (usize, usize, usize)) -> PyResult<Slices> {
    let t = linalg::fold(&to_matrix(&x)?, to_mode(mode)?, shape).map_err(py_err)?;
    Ok(from_tensor(&t))
}

/// Polar factor of a matrix, exactly or by Newton-Schulz.
#[pyfunction]
#[pyo3(signature = (m, scheme = "exact", preset = "jordan", steps = 5))]
fn orthogonalize(m: Rows, scheme: &str, preset: &str, steps: usize) -> PyResult<Rows> {
    let o = ortho::ortho(&to_matrix(&m)?, &to_scheme(scheme, preset, steps)?).map_err(py_err)?;
    Ok(o.to_rows())
}

/// Singular values in descending order.
#[pyfunction]
fn singular_values(m: Rows) -> PyResult<Vec<f64>> {
    Ok(linalg::svd(&to_matrix(&m)?).map_err(py_err)?.sigma)
}

/// Muon or TEON norm of a tensor; `dual` selects the dual norm.
#[pyfunction]
#[pyo3(signature = (t, family, dual = false))]
fn norm(t: Slices, family: &str, dual: bool) -> PyResult<f64> {
    let family = to_family(family)?;
    let kind = if dual { NormKind::dual(family) } else { NormKind::primal(family) };
    norms::norm(&to_tensor(&t)?, kind).map_err(py_err)
}

/// Steepest-descent step of radius `eta` under a norm family.
#[pyfunction]
fn ntr_step(g: Slices, family: &str, eta: f64) -> PyResult<Slices> {
    let step = norms::ntr_step(&to_tensor(&g)?, to_family(family)?, eta).map_err(py_err)?;
    Ok(from_tensor(&step))
}

/// Norms and slacks of the Muon/TEON comparability inequalities.
#[pyfunction]
fn check_comparability(t: Slices, mode: u8) -> PyResult<HashMap<String, f64>> {
    let report = norms::check_comparability(&to_tensor(&t)?, to_mode(mode)?).map_err(py_err)?;
    Ok(report.records().into_iter().collect())
}

/// Rank-one tensor on which TEON mode `mode` gains `√K` over Muon.
#[pyfunction]
#[pyo3(signature = (m, n, k, mode = 1, seed = 0))]
fn build_max_gain_tensor(m: usize, n: usize, k: usize, mode: u8, seed: u64) -> PyResult<Slices> {
    let t: Tensor3 = norms::build_max_gain_tensor(m, n, k, to_mode(mode)?, seed).map_err(py_err)?;
    Ok(from_tensor(&t))
}

/// `(left_align, right_align, sigma_gap)` of two same-shape matrices.
#[pyfunction]
fn alignment(a: Rows, b: Rows) -> PyResult<(f64, f64, f64)> {
    let al = top_singular_alignment(&to_matrix(&a)?, &to_matrix(&b)?).map_err(py_err)?;
    Ok((al.left_align, al.right_align, al.sigma_gap))
}

/// Trains a TOML run config; writes CSVs when `out_dir` is given.
/// Returns the summary records and the loss after every step.
#[pyfunction]
#[pyo3(signature = (config, out_dir = None))]
fn run_config(config: &str, out_dir: Option<&str>) -> PyResult<(HashMap<String, String>, Vec<f64>)> {
    let config = RunConfig::parse(config, Path::new("<python>")).map_err(py_err)?;
    let outcome = match out_dir {
        Some(dir) => harness::run(&config, Path::new(dir)),
        None => harness::train(&config),
    }
    .map_err(py_err)?;
    let summary = outcome.summary.records().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    Ok((summary, outcome.losses))
}

/// Layer-wise Muon on a single matrix, holding its momentum buffer.
#[pyclass(name = "Muon")]
struct PyMuon {
    policy: UpdatePolicy,
    momentum: Option<Matrix>,
    steps: u64,
}

#[pymethods]
impl PyMuon {
    #[new]
    #[pyo3(signature = (eta, mu = 0.95, momentum_style = "accumulate", scheme = "exact", weight_decay = 0.0))]
    fn new(eta: f64, mu: f64, momentum_style: &str, scheme: &str, weight_decay: f64) -> PyResult<Self> {
        let policy = UpdatePolicy::muon(eta)
            .with_mu(mu)
            .with_style(to_style(momentum_style)?)
            .with_scheme(to_scheme(scheme, "jordan", 5)?)
            .with_weight_decay(weight_decay);
        policy.validate().map_err(py_err)?;
        Ok(Self { policy, momentum: None, steps: 0 })
    }

    /// Returns the updated weights.
    fn step(&mut self, w: Rows, g: Rows) -> PyResult<Rows> {
        let (w, g) = (to_matrix(&w)?, to_matrix(&g)?);
        let momentum = self.momentum.get_or_insert_with(|| Matrix::zeros(w.rows(), w.cols()));
        let next = optim::muon_step(&w, &g, momentum, &self.policy, self.steps).map_err(py_err)?;
        self.steps += 1;
        Ok(next.to_rows())
    }

    #[getter]
    fn momentum(&self) -> Option<Rows> {
        self.momentum.as_ref().map(Matrix::to_rows)
    }
}

/// TEON on `K` stacked same-shape matrices, holding the stacked momentum.
#[pyclass(name = "Teon")]
struct PyTeon {
    policy: UpdatePolicy,
    momentum: Option<Tensor3>,
    steps: u64,
}

#[pymethods]
impl PyTeon {
    #[new]
    #[pyo3(signature = (eta, mode = 1, mu = 0.95, momentum_style = "accumulate", scheme = "exact", weight_decay = 0.0))]
    fn new(eta: f64, mode: u8, mu: f64, momentum_style: &str, scheme: &str, weight_decay: f64) -> PyResult<Self> {
        let policy = UpdatePolicy::teon(to_mode(mode)?, eta)
            .with_mu(mu)
            .with_style(to_style(momentum_style)?)
            .with_scheme(to_scheme(scheme, "jordan", 5)?)
            .with_weight_decay(weight_decay);
        policy.validate().map_err(py_err)?;
        Ok(Self { policy, momentum: None, steps: 0 })
    }

    /// Returns the updated stack of weights.
    fn step(&mut self, ws: Slices, gs: Slices) -> PyResult<Slices> {
        let (ws, gs) = (to_tensor(&ws)?, to_tensor(&gs)?);
        let (m, n, k) = ws.shape();
        let momentum = self.momentum.get_or_insert_with(|| Tensor3::zeros(m, n, k));
        let next = optim::teon_step(&ws, &gs, momentum, &self.policy, self.steps).map_err(py_err)?;
        self.steps += 1;
        Ok(from_tensor(&next))
    }

    #[getter]
    fn momentum(&self) -> Option<Slices> {
        self.momentum.as_ref().map(from_tensor)
    }
}

#[pymodule]
fn pyteon(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(matricize, m)?)?;
    m.add_function(wrap_pyfunction!(fold, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonalize, m)?)?;
    m.add_function(wrap_pyfunction!(singular_values, m)?)?;
    m.add_function(wrap_pyfunction!(norm, m)?)?;
    m.add_function(wrap_pyfunction!(ntr_step, m)?)?;
    m.add_function(wrap_pyfunction!(check_comparability, m)?)?;
    m.add_function(wrap_pyfunction!(build_max_gain_tensor, m)?)?;
    m.add_function(wrap_pyfunction!(alignment, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_class::<PyMuon>()?;
    m.add_class::<PyTeon>()?;
    Ok(())
}
