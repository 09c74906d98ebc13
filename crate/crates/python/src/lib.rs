//! Python bindings: models, datasets, training, prediction, the bound and
//! density evolution.

use fgcf::bound::BoundParams;
use fgcf::de::{DeConfig, DeMetrics, DegreePair, IncomingCount, SideMetrics};
use fgcf::eval::{Algorithm, Estimator, InitMethod, LearnerConfig, Trained};
use fgcf::model::EdgeSpec;
use fgcf::ErrorKind;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: fgcf::Error) -> PyErr {
    match (&e, e.kind()) {
        (fgcf::Error::Io { .. }, _) => PyOSError::new_err(e.to_string()),
        (_, ErrorKind::Numeric) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = fgcf::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// Latent-group rating model: group priors and a kernel `w[u][v][r]`.
#[pyclass(name = "GroupModel", module = "fgcf", from_py_object)]
#[derive(Clone)]
struct PyGroupModel {
    inner: fgcf::GroupModel,
}

#[pymethods]
impl PyGroupModel {
    #[new]
    fn new(ratings: Vec<i32>, p_u: Vec<f64>, p_v: Vec<f64>, w: Vec<Vec<Vec<f64>>>) -> PyResult<Self> {
        let inner = fgcf::GroupModel::new(ratings, p_u, p_v, &w).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn uniform(ratings: Vec<i32>, g_u: usize, g_v: usize) -> PyResult<Self> {
        let inner = fgcf::GroupModel::uniform(ratings, g_u, g_v).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: fgcf::GroupModel::from_json(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: fgcf::GroupModel::load(path).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[getter]
    fn g_u(&self) -> usize {
        self.inner.g_u()
    }

    #[getter]
    fn g_v(&self) -> usize {
        self.inner.g_v()
    }

    #[getter]
    fn ratings(&self) -> Vec<i32> {
        self.inner.ratings().to_vec()
    }

    #[getter]
    fn p_u(&self) -> Vec<f64> {
        self.inner.p_u().to_vec()
    }

    #[getter]
    fn p_v(&self) -> Vec<f64> {
        self.inner.p_v().to_vec()
    }

    #[getter]
    fn w(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.kernel_nested()
    }

    fn mean_rating(&self, u: usize, v: usize) -> f64 {
        self.inner.mean_rating(u, v)
    }

    fn __repr__(&self) -> String {
        format!(
            "GroupModel(g_u={}, g_v={}, ratings={:?})",
            self.inner.g_u(),
            self.inner.g_v(),
            self.inner.ratings()
        )
    }
}

/// Observed `(user, movie, rating)` triples with 0-based ids.
#[pyclass(name = "Observations", module = "fgcf", from_py_object)]
#[derive(Clone)]
struct PyObservations {
    inner: fgcf::ObservationSet,
}

#[pymethods]
impl PyObservations {
    #[new]
    fn new(n_users: usize, n_movies: usize, ratings: Vec<i32>, triples: Vec<(usize, usize, i32)>) -> PyResult<Self> {
        let inner = fgcf::ObservationSet::from_values(n_users, n_movies, ratings, triples).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Parse a `user,movie,rating` CSV string.
    #[staticmethod]
    #[pyo3(signature = (text, ratings=None))]
    fn from_csv(text: &str, ratings: Option<Vec<i32>>) -> PyResult<Self> {
        let inner = fgcf::ObservationSet::read_csv(text.as_bytes(), ratings.as_deref(), None).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut out = Vec::new();
        self.inner.write_csv(&mut out).map_err(to_py)?;
        Ok(String::from_utf8(out).expect("csv is utf-8"))
    }

    #[getter]
    fn n_users(&self) -> usize {
        self.inner.n_users()
    }

    #[getter]
    fn n_movies(&self) -> usize {
        self.inner.n_movies()
    }

    #[getter]
    fn ratings(&self) -> Vec<i32> {
        self.inner.alphabet().to_vec()
    }

    fn triples(&self) -> Vec<(usize, usize, i32)> {
        (0..self.inner.len())
            .map(|e| {
                let t = self.inner.triple(e);
                (t.user, t.movie, self.inner.rating_value(e))
            })
            .collect()
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        self.inner.pairs()
    }

    /// Split off `count` random ratings; returns `(train, validation)`.
    #[pyo3(signature = (count, seed=0))]
    fn hide_validation(&self, count: usize, seed: u64) -> PyResult<(Self, Self)> {
        let (train, val) = fgcf::eval::hide_validation(&self.inner, count, seed).map_err(to_py)?;
        Ok((Self { inner: train }, Self { inner: val }))
    }

    /// Keep about `per_user` ratings per user.
    #[pyo3(signature = (per_user, seed=0, index=0))]
    fn subsample(&self, per_user: f64, seed: u64, index: u64) -> PyResult<Self> {
        Ok(Self {
            inner: fgcf::eval::subsample(&self.inner, per_user, seed, index).map_err(to_py)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Observations({} ratings, {} users, {} movies)",
            self.inner.len(),
            self.inner.n_users(),
            self.inner.n_movies()
        )
    }
}

/// Draw a synthetic dataset. Returns `(observations, user_groups, movie_groups)`.
#[pyfunction]
#[pyo3(signature = (model, n_users, n_movies, per_user, seed=0))]
fn sample(
    model: &PyGroupModel,
    n_users: usize,
    n_movies: usize,
    per_user: f64,
    seed: u64,
) -> PyResult<(PyObservations, Vec<usize>, Vec<usize>)> {
    let (obs, truth) = fgcf::model::sample_synthetic(&model.inner, n_users, n_movies, &EdgeSpec::AveragePerUser(per_user), seed)
        .map_err(to_py)?;
    Ok((PyObservations { inner: obs }, truth.user_groups, truth.movie_groups))
}

/// A trained learner: fitted model, node posteriors and convergence trace.
#[pyclass(name = "Trained", module = "fgcf")]
struct PyTrained {
    inner: Trained,
    estimator: Estimator,
}

#[pymethods]
impl PyTrained {
    #[getter]
    fn model(&self) -> PyGroupModel {
        PyGroupModel {
            inner: self.inner.model.clone(),
        }
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn trace(&self) -> Vec<f64> {
        self.inner.trace.clone()
    }

    #[getter]
    fn user_posteriors(&self) -> Vec<Vec<f64>> {
        self.inner.posteriors.users.clone()
    }

    #[getter]
    fn movie_posteriors(&self) -> Vec<Vec<f64>> {
        self.inner.posteriors.movies.clone()
    }

    /// Predicted ratings for pairs that were queried at training time.
    #[pyo3(signature = (pairs, estimator=None))]
    fn predict(&self, pairs: Vec<(usize, usize)>, estimator: Option<&str>) -> PyResult<Vec<f64>> {
        let est = estimator.map(parse).transpose()?.unwrap_or(self.estimator);
        let pred = fgcf::eval::predict(&self.inner, est, &pairs).map_err(to_py)?;
        Ok(pred.entries.iter().map(|p| p.value).collect())
    }
}

/// Initialize and train IMP or EM. Pairs to predict later must be passed as
/// `query`.
#[pyfunction]
#[pyo3(signature = (obs, alg="imp", g_u=4, g_v=4, init="vdvq", estimator="r1", query=Vec::new(), seed=0, model=None))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    obs: &PyObservations,
    alg: &str,
    g_u: usize,
    g_v: usize,
    init: &str,
    estimator: &str,
    query: Vec<(usize, usize)>,
    seed: u64,
    model: Option<PyGroupModel>,
) -> PyResult<PyTrained> {
    let alg: Algorithm = parse(alg)?;
    let config = LearnerConfig {
        g_u,
        g_v,
        init: parse::<InitMethod>(init)?,
        estimator: parse(estimator)?,
        ..Default::default()
    };
    let inner = py
        .detach(|| match model {
            Some(m) => fgcf::eval::train_from(alg, &m.inner, None, &obs.inner, &config, &query),
            None => fgcf::eval::train(alg, &obs.inner, &config, seed, &query),
        })
        .map_err(to_py)?;
    Ok(PyTrained {
        inner,
        estimator: config.estimator,
    })
}

/// Root-mean-square error of `predictions` against the ratings in `truth`,
/// both in `truth.pairs()` order.
#[pyfunction]
fn rmse(predictions: Vec<f64>, truth: &PyObservations) -> PyResult<f64> {
    if predictions.len() != truth.inner.len() || predictions.is_empty() {
        return Err(PyValueError::new_err(format!(
            "{} predictions for {} observed ratings",
            predictions.len(),
            truth.inner.len()
        )));
    }
    let sum: f64 = predictions
        .iter()
        .enumerate()
        .map(|(e, p)| (p - f64::from(truth.inner.rating_value(e))).powi(2))
        .sum();
    Ok((sum / predictions.len() as f64).sqrt())
}

#[pyfunction]
#[pyo3(signature = (g_u, g_v, n_users, n_movies, observed, delta=0.1))]
fn generalization_bound(g_u: usize, g_v: usize, n_users: usize, n_movies: usize, observed: usize, delta: f64) -> PyResult<f64> {
    fgcf::bound::generalization_bound(&BoundParams {
        g_u,
        g_v,
        n_users,
        n_movies,
        observed,
        delta,
    })
    .map_err(to_py)
}

/// Local tree-likeness check; returns a dict with `lhs`, `rhs`, `holds`, `ratio`.
#[pyfunction]
fn tree_condition<'py>(
    py: Python<'py>,
    n_users: usize,
    n_movies: usize,
    d_max: usize,
    depth: usize,
    delta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let t = fgcf::de::tree_condition(n_users, n_movies, d_max, depth, delta).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("lhs", t.lhs)?;
    d.set_item("rhs", t.rhs)?;
    d.set_item("holds", t.holds)?;
    d.set_item("ratio", t.ratio)?;
    Ok(d)
}

fn side_dict<'py>(py: Python<'py>, m: &SideMetrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean_true_belief", m.mean_true_belief)?;
    d.set_item("std_error", m.std_error)?;
    d.set_item("map_error", m.map_error)?;
    d.set_item("mean_entropy", m.mean_entropy)?;
    d.set_item("entropy_histogram", m.entropy_histogram.clone())?;
    Ok(d)
}

fn metrics_list<'py>(py: Python<'py>, ms: &[DeMetrics]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    ms.iter()
        .map(|m| {
            let d = PyDict::new(py);
            d.set_item("iteration", m.iteration)?;
            d.set_item("users", side_dict(py, &m.users)?)?;
            d.set_item("movies", side_dict(py, &m.movies)?)?;
            Ok(d)
        })
        .collect()
}

/// Population-dynamics density evolution. Degree lists give the fraction of
/// nodes with each degree (index = degree). Returns `(messages, nodes)`,
/// one metrics dict per iteration starting at 0.
#[pyfunction]
#[pyo3(signature = (model, user_degrees, movie_degrees, iters=10, population=100_000, seed=0, incoming="extrinsic", inference=None))]
#[allow(clippy::too_many_arguments)]
fn density_evolution<'py>(
    py: Python<'py>,
    model: &PyGroupModel,
    user_degrees: Vec<f64>,
    movie_degrees: Vec<f64>,
    iters: usize,
    population: usize,
    seed: u64,
    incoming: &str,
    inference: Option<PyGroupModel>,
) -> PyResult<(Vec<Bound<'py, PyDict>>, Vec<Bound<'py, PyDict>>)> {
    let degrees = DegreePair::new(user_degrees, movie_degrees).map_err(to_py)?;
    let incoming = match incoming {
        "extrinsic" => IncomingCount::Extrinsic,
        "literal" => IncomingCount::Literal,
        other => return Err(PyValueError::new_err(format!("unknown incoming mode `{other}`"))),
    };
    let config = DeConfig {
        population,
        incoming,
        inference: inference.map(|m| m.inner),
    };
    let (_, trace) = py
        .detach(|| fgcf::de::de_run(&model.inner, &degrees, iters, &config, seed))
        .map_err(to_py)?;
    Ok((metrics_list(py, &trace.messages)?, metrics_list(py, &trace.nodes)?))
}

#[pymodule(name = "fgcf")]
fn fgcf_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyGroupModel>()?;
    m.add_class::<PyObservations>()?;
    m.add_class::<PyTrained>()?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(generalization_bound, m)?)?;
    m.add_function(wrap_pyfunction!(tree_condition, m)?)?;
    m.add_function(wrap_pyfunction!(density_evolution, m)?)?;
    Ok(())
}
