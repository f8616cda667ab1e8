//! Python bindings: graphs, datasets, scoring kernels, top-L extraction and
//! the cross-validation harness.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use trustrec_core::harness::{self, ThetaSummary};
use trustrec_core::ingest::{self, IngestError};
use trustrec_core::recommend::top_l as core_top_l;
use trustrec_core::{
    Dataset as CoreDataset, ExperimentConfig, HarnessError, Method, MethodConfig, MetricsReport, RatingGraph as CoreRatingGraph,
    ResourceVector, TrustGraph as CoreTrustGraph,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn ingest_err(e: IngestError) -> PyErr {
    match e {
        IngestError::Io(io) => PyIOError::new_err(io.to_string()),
        other => value_err(other),
    }
}

fn harness_err(e: HarnessError) -> PyErr {
    match e {
        HarnessError::Io(io) => PyIOError::new_err(io.to_string()),
        other => value_err(other),
    }
}

fn check_index(i: usize, len: usize, what: &str) -> PyResult<()> {
    if i < len {
        Ok(())
    } else {
        Err(PyIndexError::new_err(format!("{what} {i} out of range (0..{len})")))
    }
}

/// Bipartite user-object graph of binary rating links.
#[pyclass(name = "RatingGraph", module = "trustrec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct RatingGraph {
    inner: CoreRatingGraph,
}

#[pymethods]
impl RatingGraph {
    #[new]
    fn new(links: Vec<(usize, usize)>, users: usize, objects: usize) -> PyResult<Self> {
        let inner = CoreRatingGraph::new(&links, users, objects).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn users(&self) -> usize {
        self.inner.users()
    }

    #[getter]
    fn objects(&self) -> usize {
        self.inner.objects()
    }

    #[getter]
    fn links(&self) -> usize {
        self.inner.links()
    }

    #[getter]
    fn sparsity(&self) -> f64 {
        self.inner.sparsity()
    }

    fn user_objects(&self, user: usize) -> PyResult<Vec<usize>> {
        check_index(user, self.inner.users(), "user")?;
        Ok(self.inner.user_objects(user).to_vec())
    }

    fn object_users(&self, object: usize) -> PyResult<Vec<usize>> {
        check_index(object, self.inner.objects(), "object")?;
        Ok(self.inner.object_users(object).to_vec())
    }

    fn user_degrees(&self) -> Vec<usize> {
        self.inner.user_degrees()
    }

    fn object_degrees(&self) -> Vec<usize> {
        self.inner.object_degrees()
    }

    fn has_link(&self, user: usize, object: usize) -> bool {
        self.inner.has_link(user, object)
    }

    /// All links as `(user, object)` pairs in user-major order.
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.iter_links().collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "RatingGraph(users={}, objects={}, links={})",
            self.inner.users(),
            self.inner.objects(),
            self.inner.links()
        )
    }
}

/// Directed user-user trust graph; self-loops and duplicates are dropped.
#[pyclass(name = "TrustGraph", module = "trustrec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct TrustGraph {
    inner: CoreTrustGraph,
}

#[pymethods]
impl TrustGraph {
    #[new]
    fn new(edges: Vec<(usize, usize)>, users: usize) -> PyResult<Self> {
        let inner = CoreTrustGraph::new(&edges, users).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn users(&self) -> usize {
        self.inner.users()
    }

    #[getter]
    fn links(&self) -> usize {
        self.inner.links()
    }

    fn trusted_by(&self, user: usize) -> PyResult<Vec<usize>> {
        check_index(user, self.inner.users(), "user")?;
        Ok(self.inner.trusted_by(user).to_vec())
    }

    fn trusts(&self, truster: usize, trustee: usize) -> bool {
        self.inner.trusts(truster, trustee)
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.iter_edges().collect()
    }

    fn __repr__(&self) -> String {
        format!("TrustGraph(users={}, links={})", self.inner.users(), self.inner.links())
    }
}

/// Rating graph, trust graph and the external ids of users and objects.
#[pyclass(name = "Dataset", module = "trustrec", frozen)]
struct Dataset {
    inner: CoreDataset,
}

#[pymethods]
impl Dataset {
    #[new]
    fn new(rating_graph: &RatingGraph, trust_graph: &TrustGraph) -> PyResult<Self> {
        let inner = CoreDataset::from_graphs(rating_graph.inner.clone(), trust_graph.inner.clone()).map_err(ingest_err)?;
        Ok(Self { inner })
    }

    /// Reads raw tab-separated ratings and trust files.
    #[staticmethod]
    #[pyo3(signature = (ratings, trust, threshold = ingest::DEFAULT_THRESHOLD))]
    fn load_raw(ratings: PathBuf, trust: PathBuf, threshold: u8) -> PyResult<Self> {
        let (inner, _) = ingest::load_raw(&ratings, &trust, threshold).map_err(ingest_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn read_canonical(path: PathBuf) -> PyResult<Self> {
        let (inner, _) = ingest::read_canonical_file(&path).map_err(ingest_err)?;
        Ok(Self { inner })
    }

    fn write_canonical(&self, path: PathBuf) -> PyResult<()> {
        ingest::write_canonical_file(&self.inner, &path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn rating_graph(&self) -> RatingGraph {
        RatingGraph {
            inner: self.inner.rating_graph.clone(),
        }
    }

    #[getter]
    fn trust_graph(&self) -> TrustGraph {
        TrustGraph {
            inner: self.inner.trust_graph.clone(),
        }
    }

    #[getter]
    fn user_ids(&self) -> Vec<String> {
        self.inner.users.tokens().to_vec()
    }

    #[getter]
    fn object_ids(&self) -> Vec<String> {
        self.inner.objects.tokens().to_vec()
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.stats();
        let d = PyDict::new(py);
        d.set_item("users", s.users)?;
        d.set_item("objects", s.objects)?;
        d.set_item("rating_links", s.rating_links)?;
        d.set_item("rating_sparsity", s.rating_sparsity)?;
        d.set_item("trust_links", s.trust_links)?;
        d.set_item("trust_sparsity", s.trust_sparsity)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let s = self.inner.stats();
        format!(
            "Dataset(users={}, objects={}, rating_links={}, trust_links={})",
            s.users, s.objects, s.rating_links, s.trust_links
        )
    }
}

fn method_config(method: &str, theta: Option<f64>) -> PyResult<MethodConfig> {
    let m: Method = method.parse().map_err(value_err)?;
    match (m, theta) {
        (Method::CosRaT, t) => MethodConfig::cosra_t(t.unwrap_or(0.70)).map_err(value_err),
        (_, None) => Ok(MethodConfig::plain(m)),
        (_, Some(_)) => Err(PyValueError::new_err(format!("{m} takes no theta"))),
    }
}

/// Scores of every object for `user`. `method` is one of GR, UCF, HC, MD,
/// CosRA, CosRA_T; `theta` applies to CosRA_T only (default 0.7).
#[pyfunction]
#[pyo3(signature = (method, rating_graph, trust_graph, user, theta = None))]
fn score(method: &str, rating_graph: &RatingGraph, trust_graph: &TrustGraph, user: usize, theta: Option<f64>) -> PyResult<Vec<f64>> {
    let cfg = method_config(method, theta)?;
    let g = &rating_graph.inner;
    check_index(user, g.users(), "user")?;
    if trust_graph.inner.users() != g.users() {
        return Err(PyValueError::new_err("trust graph and rating graph have different user counts"));
    }
    Ok(cfg.score(g, &trust_graph.inner, user).into_inner())
}

/// The `length` highest-scoring objects not in `collected`, best first;
/// ties go to the smaller object index.
#[pyfunction]
fn top_l(scores: Vec<f64>, collected: Vec<usize>, length: usize) -> PyResult<Vec<usize>> {
    if length == 0 {
        return Err(PyValueError::new_err("length must be positive"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(PyValueError::new_err("scores must not contain NaN"));
    }
    let mut collected = collected;
    collected.sort_unstable();
    collected.dedup();
    Ok(core_top_l(0, &ResourceVector::from(scores), &collected, length).items)
}

fn experiment_config(
    methods: Option<Vec<String>>,
    theta: f64,
    list_lengths: Vec<usize>,
    folds: usize,
    realizations: usize,
    seed: u64,
) -> PyResult<ExperimentConfig> {
    let defaults = ExperimentConfig::default();
    let methods = match methods {
        None => defaults.methods.iter().map(|m| m.method.name().to_string()).collect(),
        Some(m) => m,
    };
    let methods = methods
        .iter()
        .map(|m| {
            let parsed: Method = m.parse().map_err(value_err)?;
            method_config(m, (parsed == Method::CosRaT).then_some(theta))
        })
        .collect::<PyResult<Vec<_>>>()?;
    let cfg = ExperimentConfig {
        methods,
        list_lengths,
        folds,
        realizations,
        seed,
        ..defaults
    };
    cfg.validate().map_err(value_err)?;
    Ok(cfg)
}

fn report_rows<'py>(py: Python<'py>, report: &MetricsReport) -> PyResult<Vec<Bound<'py, PyDict>>> {
    report
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("method", r.method.name())?;
            d.set_item("metric", r.metric.name())?;
            d.set_item("L", r.list_len)?;
            d.set_item("theta", r.theta)?;
            d.set_item("mean", r.mean)?;
            d.set_item("stderr", r.stderr)?;
            d.set_item("evaluable_users", r.evaluable_users)?;
            Ok(d)
        })
        .collect()
}

fn theta_summary<'py>(py: Python<'py>, s: &ThetaSummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let optima = s
        .optima
        .iter()
        .map(|o| {
            let row = PyDict::new(py);
            row.set_item("metric", o.metric.name())?;
            row.set_item("L", o.list_len)?;
            row.set_item("theta", o.theta)?;
            row.set_item("value", o.value)?;
            Ok(row)
        })
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("optima", optima)?;
    d.set_item("overall", s.overall)?;
    Ok(d)
}

/// Cross-validated evaluation; returns one dict per report row.
#[pyfunction]
#[pyo3(signature = (
    dataset, methods = None, theta = 0.70, list_lengths = vec![harness::DEFAULT_LIST_LENGTH],
    folds = harness::DEFAULT_FOLDS, realizations = harness::DEFAULT_REALIZATIONS, seed = harness::DEFAULT_SEED,
))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    dataset: &Dataset,
    methods: Option<Vec<String>>,
    theta: f64,
    list_lengths: Vec<usize>,
    folds: usize,
    realizations: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = experiment_config(methods, theta, list_lengths, folds, realizations, seed)?;
    let d = &dataset.inner;
    let report = py.detach(|| trustrec_core::run_experiment(d, "python", &cfg)).map_err(harness_err)?;
    report_rows(py, &report)
}

/// CosRA+T over `thetas` on shared splits; returns `(rows, summary)`.
#[pyfunction]
#[pyo3(signature = (
    dataset, thetas, list_lengths = vec![harness::DEFAULT_LIST_LENGTH],
    folds = harness::DEFAULT_FOLDS, realizations = harness::DEFAULT_REALIZATIONS, seed = harness::DEFAULT_SEED,
))]
fn sweep_theta<'py>(
    py: Python<'py>,
    dataset: &Dataset,
    thetas: Vec<f64>,
    list_lengths: Vec<usize>,
    folds: usize,
    realizations: usize,
    seed: u64,
) -> PyResult<(Vec<Bound<'py, PyDict>>, Bound<'py, PyDict>)> {
    let mut cfg = experiment_config(Some(vec!["CosRA_T".into()]), 0.70, list_lengths, folds, realizations, seed)?;
    cfg.theta_values = thetas;
    cfg.validate().map_err(value_err)?;
    let d = &dataset.inner;
    let (report, summary) = py.detach(|| trustrec_core::sweep_theta(d, "python", &cfg)).map_err(harness_err)?;
    Ok((report_rows(py, &report)?, theta_summary(py, &summary)?))
}

/// `(degree, count)` pairs over all top-L lists of fold 0.
#[pyfunction]
#[pyo3(signature = (dataset, method, length = harness::DEFAULT_LIST_LENGTH, theta = None, folds = harness::DEFAULT_FOLDS, seed = harness::DEFAULT_SEED))]
fn degree_distribution(
    py: Python<'_>,
    dataset: &Dataset,
    method: &str,
    length: usize,
    theta: Option<f64>,
    folds: usize,
    seed: u64,
) -> PyResult<Vec<(usize, usize)>> {
    let cfg = method_config(method, theta)?;
    let d = &dataset.inner;
    py.detach(|| harness::recommended_degree_distribution(d, cfg, length, folds, seed))
        .map_err(harness_err)
}

#[pymodule]
fn trustrec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<RatingGraph>()?;
    m.add_class::<TrustGraph>()?;
    m.add_class::<Dataset>()?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(top_l, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_theta, m)?)?;
    m.add_function(wrap_pyfunction!(degree_distribution, m)?)?;
    m.add("METHODS", Method::ALL.iter().map(|m| m.name()).collect::<Vec<_>>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
