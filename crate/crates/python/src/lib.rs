//! Python bindings. Reports come back as plain dicts and lists.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use ontic_core::game::{self, GameModel};
use ontic_core::independence;
use ontic_core::measures::{self, Distribution, OnticSpace};
use ontic_core::model_file;
use ontic_core::models;
use ontic_core::toymodel::{self, SearchOptions};
use ontic_core::OntologicalModel;

fn err(e: ontic_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn pair(p: Vec<f64>, q: Vec<f64>, weights: Option<Vec<f64>>) -> PyResult<(Distribution, Distribution)> {
    let n = p.len();
    let weights = weights.unwrap_or_else(|| vec![1.0; n]);
    let space = Arc::new(OnticSpace::new((0..n).map(|i| i.to_string()).collect(), weights).map_err(err)?);
    Ok((
        Distribution::new(space.clone(), p).map_err(err)?,
        Distribution::new(space, q).map_err(err)?,
    ))
}

/// Total variation distance between two densities on the same atoms.
#[pyfunction]
#[pyo3(signature = (p, q, weights=None))]
fn total_variation(p: Vec<f64>, q: Vec<f64>, weights: Option<Vec<f64>>) -> PyResult<f64> {
    let (p, q) = pair(p, q, weights)?;
    measures::total_variation(&p, &q).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (p, q, weights=None))]
fn overlap(p: Vec<f64>, q: Vec<f64>, weights: Option<Vec<f64>>) -> PyResult<f64> {
    let (p, q) = pair(p, q, weights)?;
    measures::overlap(&p, &q).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (p, q, weights=None))]
fn fidelity(p: Vec<f64>, q: Vec<f64>, weights: Option<Vec<f64>>) -> PyResult<f64> {
    let (p, q) = pair(p, q, weights)?;
    measures::fidelity(&p, &q).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (p, q, weights=None))]
fn hellinger(p: Vec<f64>, q: Vec<f64>, weights: Option<Vec<f64>>) -> PyResult<f64> {
    let (p, q) = pair(p, q, weights)?;
    measures::hellinger(&p, &q).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (p, q, weights=None))]
fn inequality_chain<'py>(
    py: Python<'py>,
    p: Vec<f64>,
    q: Vec<f64>,
    weights: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let (p, q) = pair(p, q, weights)?;
    to_py(py, &measures::inequality_chain(&p, &q).map_err(err)?)
}

/// Born probabilities of the four product preparations against the
/// entangled basis, rows ordered `00, 0+, +0, ++`.
#[pyfunction]
fn born_table() -> Vec<Vec<f64>> {
    ontic_core::quantum::pbr_born_table().iter().map(|r| r.to_vec()).collect()
}

/// An ontological model loaded from the JSON model format.
#[pyclass(name = "Model", module = "ontic", frozen)]
struct PyModel {
    inner: OntologicalModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        model_file::parse_model(text).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        model_file::load_model(path).map(|inner| Self { inner }).map_err(err)
    }

    fn to_json(&self) -> String {
        model_file::model_to_json(&self.inner)
    }

    #[getter]
    fn atoms(&self) -> Vec<String> {
        self.inner.space().atoms().to_vec()
    }

    #[getter]
    fn preparations(&self) -> Vec<String> {
        self.inner.grid().keys()
    }

    #[getter]
    fn experiments(&self) -> Vec<String> {
        self.inner.experiments().iter().map(|e| e.name().to_owned()).collect()
    }

    fn density(&self, key: &str) -> PyResult<Vec<f64>> {
        let (x, y) = key
            .split_once(',')
            .ok_or_else(|| PyValueError::new_err(format!("preparation key `{key}` is not \"x,y\"")))?;
        let d = self.inner.grid().get_labeled(x, y).map_err(err)?;
        Ok(d.density().to_vec())
    }

    #[pyo3(signature = (tol=1e-9))]
    fn quantum_consistency<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &models::quantum_consistency(&self.inner, tol).map_err(err)?)
    }

    #[pyo3(signature = (tol=independence::PUC_TOL))]
    fn puc_check<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &independence::puc_check(self.inner.grid(), tol))
    }

    #[pyo3(signature = (tol=1e-9))]
    fn nca_check<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &independence::nca_check(self.inner.grid(), tol).map_err(err)?)
    }

    fn posterior<'py>(
        &self,
        py: Python<'py>,
        priors_x: Vec<f64>,
        priors_y: Vec<f64>,
        atom: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        to_py(
            py,
            &independence::posterior(self.inner.grid(), &priors_x, &priors_y, atom).map_err(err)?,
        )
    }

    #[pyo3(signature = (experiment=0))]
    fn preclusion_table<'py>(&self, py: Python<'py>, experiment: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &models::preclusion_table(self.inner.grid(), self.experiment(experiment)?).map_err(err)?)
    }

    #[pyo3(signature = (experiment=0))]
    fn theorem1<'py>(&self, py: Python<'py>, experiment: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &independence::theorem1_check(self.inner.grid(), self.experiment(experiment)?).map_err(err)?)
    }

    #[pyo3(signature = (experiment=0))]
    fn theorem2<'py>(&self, py: Python<'py>, experiment: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &independence::theorem2_check(self.inner.grid(), self.experiment(experiment)?).map_err(err)?)
    }

    /// Claims about the four-box model, each with a pass flag.
    #[pyo3(signature = (tol=1e-12))]
    fn verify_appendix_claims<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &toymodel::verify_appendix_claims(&self.inner, tol).map_err(err)?)
    }

    fn determination<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &independence::determination_map(self.inner.grid()))
    }

    fn __repr__(&self) -> String {
        let (nx, ny) = self.inner.grid().shape();
        format!(
            "Model(atoms={}, preparations={}x{}, experiments={})",
            self.inner.space().len(),
            nx,
            ny,
            self.inner.experiments().len()
        )
    }
}

impl PyModel {
    fn experiment(&self, idx: usize) -> PyResult<&models::Experiment> {
        self.inner
            .experiments()
            .get(idx)
            .ok_or_else(|| PyValueError::new_err(format!("no experiment #{idx}")))
    }
}

/// Every four-box model matching the quantum statistics, in search order.
#[pyfunction]
#[pyo3(signature = (require_nca_violation=false, require_critical_overlap=false, rational_fallback=false))]
fn toy_search(require_nca_violation: bool, require_critical_overlap: bool, rational_fallback: bool) -> Vec<PyModel> {
    let search = toymodel::search_toy_models(&SearchOptions {
        require_nca_violation,
        require_critical_overlap,
        rational_fallback,
    });
    search.models().into_iter().map(|inner| PyModel { inner }).collect()
}

#[pyfunction]
fn spekkens_independent_model() -> PyModel {
    PyModel {
        inner: toymodel::spekkens_independent_model(),
    }
}

/// N-subsystem model in which the ontic state hides at most one preparation.
#[pyclass(name = "OneSlackModel", module = "ontic", frozen)]
struct PyOneSlack {
    inner: game::OneSlackModel,
}

#[pymethods]
impl PyOneSlack {
    #[new]
    fn new(n: usize, determinism: f64) -> PyResult<Self> {
        game::OneSlackModel::new(n, determinism).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn subsystems(&self) -> usize {
        self.inner.subsystems()
    }

    #[getter]
    fn atom_count(&self) -> usize {
        self.inner.atom_count()
    }

    fn atom_label(&self, atom: usize) -> String {
        self.inner.atom_label(atom)
    }

    fn analytic_p_correct(&self) -> f64 {
        self.inner.analytic_p_correct()
    }

    fn simulate<'py>(&self, py: Python<'py>, trials: u64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let result = py.detach(|| game::simulate_game(&self.inner, trials, seed)).map_err(err)?;
        to_py(py, &result)
    }

    fn pair_incorrect_check<'py>(
        &self,
        py: Python<'py>,
        alpha: usize,
        beta: usize,
        trials: u64,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let report = py
            .detach(|| game::pair_incorrect_check(&self.inner, alpha, beta, trials, seed))
            .map_err(err)?;
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!(
            "OneSlackModel(n={}, determinism={})",
            self.inner.subsystems(),
            self.inner.determinism()
        )
    }
}

#[pyfunction]
fn perfect_case_bounds<'py>(py: Python<'py>, n: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &game::perfect_case_bounds(n).map_err(err)?)
}

#[pyfunction]
fn epsilon_case_bounds<'py>(py: Python<'py>, n: usize, epsilon: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &game::epsilon_case_bounds(n, epsilon).map_err(err)?)
}

#[pyfunction]
fn extendibility_bound<'py>(py: Python<'py>, epsilon: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &game::extendibility_bound(epsilon).map_err(err)?)
}

#[pymodule]
pub fn ontic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyOneSlack>()?;
    m.add_function(wrap_pyfunction!(total_variation, m)?)?;
    m.add_function(wrap_pyfunction!(overlap, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(hellinger, m)?)?;
    m.add_function(wrap_pyfunction!(inequality_chain, m)?)?;
    m.add_function(wrap_pyfunction!(born_table, m)?)?;
    m.add_function(wrap_pyfunction!(toy_search, m)?)?;
    m.add_function(wrap_pyfunction!(spekkens_independent_model, m)?)?;
    m.add_function(wrap_pyfunction!(perfect_case_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_case_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(extendibility_bound, m)?)?;
    Ok(())
}
