//! Python bindings. Recommendation vectors cross the boundary as either a
//! list of video IDs (one count each) or a `{id: count}` dict.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use rabbithole::attraction::{self, MainstreamModel};
use rabbithole::clustering::{self, Partition, WardDistance};
use rabbithole::detector::{self, SimilarityMatrix};
use rabbithole::markov::{self, ChainSpec, Representation};
use rabbithole::model::{self, Catalog, Eviction, SimParams};
use rabbithole::{ingest, validate, RecVector, VideoId};

fn to_py(e: rabbithole::Error) -> PyErr {
    match e {
        rabbithole::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[derive(FromPyObject)]
enum VectorArg {
    Counts(BTreeMap<String, u32>),
    Ids(Vec<String>),
}

impl VectorArg {
    fn into_vector(self) -> PyResult<RecVector> {
        let id = |s: String| VideoId::new(s).map_err(to_py);
        match self {
            VectorArg::Counts(m) => {
                let mut out = RecVector::new();
                for (k, c) in m {
                    out.add(id(k)?, c);
                }
                Ok(out)
            }
            VectorArg::Ids(ids) => Ok(RecVector::from_ids(
                ids.into_iter().map(id).collect::<PyResult<Vec<_>>>()?,
            )),
        }
    }
}

fn vectors(vs: Vec<VectorArg>) -> PyResult<Vec<RecVector>> {
    vs.into_iter().map(VectorArg::into_vector).collect()
}

fn to_dict(v: &RecVector) -> BTreeMap<String, u32> {
    v.iter().map(|(id, c)| (id.as_str().to_owned(), c)).collect()
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<SimilarityMatrix> {
    SimilarityMatrix::from_rows(&rows).map_err(to_py)
}

fn dense(m: &SimilarityMatrix) -> Vec<Vec<f64>> {
    (0..m.len())
        .map(|i| (0..m.len()).map(|j| m.get(i, j)).collect())
        .collect()
}

fn partition(labels: &Bound<'_, PyAny>) -> PyResult<Partition> {
    let keys = labels
        .try_iter()?
        .map(|item| Ok(item?.str()?.to_string()))
        .collect::<PyResult<Vec<String>>>()?;
    Ok(Partition::from_labels(&keys))
}

/// Cosine similarity of two recommendation vectors.
#[pyfunction]
fn cosine(a: VectorArg, b: VectorArg) -> PyResult<f64> {
    rabbithole::cosine(&a.into_vector()?, &b.into_vector()?).map_err(to_py)
}

/// `(in_rh, out_rh)` expected similarities for a catalog of `v` videos with
/// `b` attractors and `y` recommendations per round.
#[pyfunction]
fn expected_similarity(v: usize, b: usize, y: usize) -> PyResult<(f64, f64)> {
    let e = detector::expected_similarity(v, b, y).map_err(to_py)?;
    Ok((e.in_rh, e.out_rh))
}

/// Geometric mean of the expected in/out similarities.
#[pyfunction]
fn default_threshold(v: usize, b: usize, y: usize) -> PyResult<f64> {
    detector::default_threshold(detector::expected_similarity(v, b, y).map_err(to_py)?).map_err(to_py)
}

#[pyclass(name = "SimTrace", frozen)]
struct PySimTrace(model::SimTrace);

#[pymethods]
impl PySimTrace {
    #[getter]
    fn users(&self) -> usize {
        self.0.users()
    }

    #[getter]
    fn rounds(&self) -> usize {
        self.0.rounds
    }

    #[getter]
    fn h(&self) -> usize {
        self.0.h
    }

    fn p_b(&self, round: usize, user: usize) -> PyResult<f64> {
        if round > self.0.rounds || user >= self.0.users() {
            return Err(PyValueError::new_err("round or user out of range"));
        }
        Ok(self.0.p_b(round, user))
    }

    fn trajectory(&self, user: usize) -> PyResult<Vec<f64>> {
        if user >= self.0.users() {
            return Err(PyValueError::new_err("user out of range"));
        }
        Ok(self.0.trajectory(user))
    }

    fn labels_at(&self, round: usize) -> PyResult<Vec<&'static str>> {
        if round > self.0.rounds {
            return Err(PyValueError::new_err("round out of range"));
        }
        Ok(self.0.labels_at(round).iter().map(|l| l.as_str()).collect())
    }

    fn absorbed_fraction(&self, round: usize) -> PyResult<f64> {
        if round > self.0.rounds {
            return Err(PyValueError::new_err("round out of range"));
        }
        Ok(self.0.absorbed_fraction(round))
    }

    #[getter]
    fn final_labels(&self) -> Vec<&'static str> {
        self.0.final_labels.iter().map(|l| l.as_str()).collect()
    }

    #[getter]
    fn final_recommendations(&self) -> Vec<BTreeMap<String, u32>> {
        self.0.final_recommendations.iter().map(to_dict).collect()
    }
}

fn sim_params(n: usize, y: usize, h: usize, rounds: usize, eviction: &str, seed: u64) -> PyResult<SimParams> {
    Ok(SimParams {
        n,
        y,
        h,
        rounds,
        eviction: eviction.parse::<Eviction>().map_err(to_py)?,
        seed,
    })
}

/// Runs the feedback-loop simulation on a uniform catalog.
#[pyfunction]
#[pyo3(signature = (v=1000, b=100, n=100, y=50, h=10, rounds=50, eviction="fifo", seed=1))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    v: usize,
    b: usize,
    n: usize,
    y: usize,
    h: usize,
    rounds: usize,
    eviction: &str,
    seed: u64,
) -> PyResult<PySimTrace> {
    let catalog = Catalog::uniform(v, b).map_err(to_py)?;
    let params = sim_params(n, y, h, rounds, eviction, seed)?;
    let trace = py.detach(|| model::simulate(&params, &catalog)).map_err(to_py)?;
    Ok(PySimTrace(trace))
}

/// Like `simulate`, doubling the rounds until every user is absorbed.
#[pyfunction]
#[pyo3(signature = (v=1000, b=100, n=100, y=50, h=10, rounds=50, eviction="fifo", seed=1, max_rounds=100_000))]
#[allow(clippy::too_many_arguments)]
fn converged_population(
    py: Python<'_>,
    v: usize,
    b: usize,
    n: usize,
    y: usize,
    h: usize,
    rounds: usize,
    eviction: &str,
    seed: u64,
    max_rounds: usize,
) -> PyResult<PySimTrace> {
    let catalog = Catalog::uniform(v, b).map_err(to_py)?;
    let params = sim_params(n, y, h, rounds, eviction, seed)?;
    let trace = py
        .detach(|| rabbithole::synth::converged_population(&params, &catalog, max_rounds))
        .map_err(to_py)?;
    Ok(PySimTrace(trace))
}

fn chain_spec(h: usize, representation: &str, iterative: bool) -> PyResult<ChainSpec> {
    Ok(ChainSpec {
        h,
        representation: representation.parse::<Representation>().map_err(to_py)?,
        iterative,
    })
}

/// Absorption analysis of the Markov chain. Returns a dict with per-state
/// `state`, `absorbing`, `p_rh` and `expected_steps` lists.
#[pyfunction]
#[pyo3(signature = (h, representation="count", iterative=false))]
fn absorption(py: Python<'_>, h: usize, representation: &str, iterative: bool) -> PyResult<Py<PyAny>> {
    let spec = chain_spec(h, representation, iterative)?;
    let (m, r) = py
        .detach(|| -> rabbithole::Result<_> {
            let m = markov::build_chain(spec)?;
            let r = markov::absorption_probabilities(&m)?;
            Ok((m, r))
        })
        .map_err(to_py)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("state", (0..m.len()).map(|s| m.label(s)).collect::<Vec<_>>())?;
    d.set_item("absorbing", r.absorbing)?;
    d.set_item("p_rh", r.p_rh)?;
    d.set_item("expected_steps", r.expected_steps)?;
    Ok(d.into_any().unbind())
}

/// `(rh_bound, mainstream_bound)`: eventual shares of a fresh population.
#[pyfunction]
#[pyo3(signature = (h=10, v=1000, b=100, representation="count", iterative=false))]
fn trapping_profile(h: usize, v: usize, b: usize, representation: &str, iterative: bool) -> PyResult<(f64, f64)> {
    let spec = chain_spec(h, representation, iterative)?;
    let catalog = Catalog::uniform(v, b).map_err(to_py)?;
    let p = markov::trapping_profile(spec, &catalog).map_err(to_py)?;
    Ok((p.rh_bound, p.mainstream_bound))
}

/// Dense pairwise cosine matrix.
#[pyfunction]
#[pyo3(signature = (vectors, binary=false))]
fn pairwise_similarity(py: Python<'_>, vectors: Vec<VectorArg>, binary: bool) -> PyResult<Vec<Vec<f64>>> {
    let vs = self::vectors(vectors)?;
    let m = py
        .detach(|| detector::pairwise_similarity(&vs, binary))
        .map_err(to_py)?;
    Ok(dense(&m))
}

/// U_A / U_B / U_AB label per row of a similarity matrix.
#[pyfunction]
fn classify_rh(similarity: Vec<Vec<f64>>, tau: f64) -> PyResult<Vec<&'static str>> {
    let m = matrix(similarity)?;
    let p = detector::classify_rh(&m, tau).map_err(to_py)?;
    Ok(p.labels(m.len()).iter().map(|l| l.as_str()).collect())
}

#[pyclass(name = "KMeansResult", frozen, get_all)]
struct PyKMeans {
    labels: Vec<usize>,
    within_ss: f64,
    between_ss: f64,
    total_ss: f64,
    between_ratio: f64,
    restart: usize,
    iterations: usize,
}

/// Best-of-`restarts` k-means; labels are 1..k by first appearance.
#[pyfunction]
#[pyo3(signature = (vectors, k, restarts=25, seed=1))]
fn kmeans(py: Python<'_>, vectors: Vec<VectorArg>, k: usize, restarts: usize, seed: u64) -> PyResult<PyKMeans> {
    let vs = self::vectors(vectors)?;
    let r = py
        .detach(|| clustering::kmeans(&vs, k, restarts, seed))
        .map_err(to_py)?;
    Ok(PyKMeans {
        labels: r.partition.labels().to_vec(),
        within_ss: r.within_ss,
        between_ss: r.between_ss,
        total_ss: r.total_ss,
        between_ratio: r.between_ratio(),
        restart: r.restart,
        iterations: r.iterations,
    })
}

/// Rand index of two labelings; labels may be any objects, compared by `str()`.
#[pyfunction]
fn rand_index(a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>) -> PyResult<f64> {
    clustering::rand_index(&partition(a)?, &partition(b)?).map_err(to_py)
}

/// Adjusted Rand index of two labelings.
#[pyfunction]
fn adjusted_rand_index(a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>) -> PyResult<f64> {
    clustering::adjusted_rand_index(&partition(a)?, &partition(b)?).map_err(to_py)
}

#[pyclass(name = "Dendrogram", frozen)]
struct PyDendrogram(clustering::Dendrogram);

#[pymethods]
impl PyDendrogram {
    /// `(left, right, height, size)` per merge; merge `i` creates cluster `n + i`.
    #[getter]
    fn merges(&self) -> Vec<(usize, usize, f64, usize)> {
        self.0
            .merges
            .iter()
            .map(|m| (m.left, m.right, m.height, m.size))
            .collect()
    }

    #[getter]
    fn max_height(&self) -> f64 {
        self.0.max_height()
    }

    /// Flat clustering joining only merges strictly below `height`.
    fn cut(&self, height: f64) -> Vec<usize> {
        clustering::cut_dendrogram(&self.0, height).labels().to_vec()
    }
}

/// Ward linkage on a cosine similarity matrix. `distance` is
/// `"one_minus_cosine"` or `"unit_euclidean"`.
#[pyfunction]
#[pyo3(signature = (similarity, distance="one_minus_cosine"))]
fn ward_linkage(similarity: Vec<Vec<f64>>, distance: &str) -> PyResult<PyDendrogram> {
    let d = match distance {
        "one_minus_cosine" => WardDistance::OneMinusCosine,
        "unit_euclidean" => WardDistance::UnitEuclidean,
        other => return Err(PyValueError::new_err(format!("unknown distance '{other}'"))),
    };
    Ok(PyDendrogram(
        clustering::ward_linkage(&matrix(similarity)?, d).map_err(to_py)?,
    ))
}

#[pyclass(name = "MainstreamModel", frozen)]
struct PyMainstream(MainstreamModel);

#[pymethods]
impl PyMainstream {
    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma
    }

    #[getter]
    fn quantile(&self) -> f64 {
        self.0.quantile
    }

    #[getter]
    fn calibration_mean(&self) -> f64 {
        self.0.calibration_mean
    }

    #[getter]
    fn calibration_size(&self) -> usize {
        self.0.calibration_size
    }

    #[getter]
    fn calibration_in_fraction(&self) -> f64 {
        self.0.calibration_in_fraction
    }

    #[getter]
    fn barycenter(&self) -> BTreeMap<String, f64> {
        self.0
            .barycenter
            .iter()
            .map(|(id, w)| (id.as_str().to_owned(), w))
            .collect()
    }

    fn similarity(&self, y: VectorArg) -> PyResult<f64> {
        self.0.similarity(&y.into_vector()?).map_err(to_py)
    }

    fn contains(&self, y: VectorArg) -> PyResult<bool> {
        attraction::in_mainstream(&y.into_vector()?, &self.0).map_err(to_py)
    }
}

/// Fits the mainstream barycenter and σ on fresh (hop-0) snapshots.
#[pyfunction]
#[pyo3(signature = (snapshots, quantile=0.95))]
fn fit_mainstream(snapshots: Vec<VectorArg>, quantile: f64) -> PyResult<PyMainstream> {
    Ok(PyMainstream(
        attraction::fit_mainstream(&vectors(snapshots)?, quantile).map_err(to_py)?,
    ))
}

type Diagnostics = Vec<(usize, String)>;

/// Parses a JSON Lines walk log. Returns `(walks, diagnostics)`: each walk is
/// a dict with `walk_id`, `profile`, `watched` and `recommendations` (one
/// entry per hop); each diagnostic is `(line, message)`.
#[pyfunction]
fn parse_walks(py: Python<'_>, path: std::path::PathBuf) -> PyResult<(Vec<Py<PyAny>>, Diagnostics)> {
    let report = ingest::parse_walks(&path).map_err(to_py)?;
    let mut walks = Vec::with_capacity(report.walks.len());
    for w in report.walks.iter() {
        let d = pyo3::types::PyDict::new(py);
        d.set_item("walk_id", &w.walk_id)?;
        d.set_item("profile", &w.profile)?;
        d.set_item(
            "watched",
            w.hops
                .iter()
                .map(|h| h.watched.as_ref().map(|v| v.as_str().to_owned()))
                .collect::<Vec<_>>(),
        )?;
        d.set_item(
            "recommendations",
            w.hops.iter().map(|h| to_dict(&h.recommendations)).collect::<Vec<_>>(),
        )?;
        walks.push(d.into_any().unbind());
    }
    let diagnostics = report.diagnostics.into_iter().map(|d| (d.line, d.message)).collect();
    Ok((walks, diagnostics))
}

/// Runs the self-check suite; returns `(name, passed, detail)` per check.
#[pyfunction]
#[pyo3(name = "validate", signature = (seed=1))]
fn run_validate(py: Python<'_>, seed: u64) -> Vec<(&'static str, bool, String)> {
    py.detach(|| validate::run_all(seed))
        .into_iter()
        .map(|c| (c.name, c.passed, c.detail))
        .collect()
}

#[pymodule]
fn rabbithole_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySimTrace>()?;
    m.add_class::<PyKMeans>()?;
    m.add_class::<PyDendrogram>()?;
    m.add_class::<PyMainstream>()?;
    m.add_function(wrap_pyfunction!(cosine, m)?)?;
    m.add_function(wrap_pyfunction!(expected_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(default_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(converged_population, m)?)?;
    m.add_function(wrap_pyfunction!(absorption, m)?)?;
    m.add_function(wrap_pyfunction!(trapping_profile, m)?)?;
    m.add_function(wrap_pyfunction!(pairwise_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(classify_rh, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(rand_index, m)?)?;
    m.add_function(wrap_pyfunction!(adjusted_rand_index, m)?)?;
    m.add_function(wrap_pyfunction!(ward_linkage, m)?)?;
    m.add_function(wrap_pyfunction!(fit_mainstream, m)?)?;
    m.add_function(wrap_pyfunction!(parse_walks, m)?)?;
    m.add_function(wrap_pyfunction!(run_validate, m)?)?;
    Ok(())
}
