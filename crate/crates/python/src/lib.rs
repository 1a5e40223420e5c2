//! Python bindings.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use toxspread_core::analytics;
use toxspread_core::behavior::{self, CategoryFractions, CategoryProfile, UserCategory};
use toxspread_core::engine::{self, SeedSpec, SimulationConfig};
use toxspread_core::graph::{self, DirectedGraph, NodeId};
use toxspread_core::harness::{self, ExperimentSpec};
use toxspread_core::intervention::{self, PlacementStrategy};
use toxspread_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn category(name: &str) -> PyResult<UserCategory> {
    name.parse().map_err(py_err)
}

/// Directed graph with dense node ids.
#[pyclass(name = "Graph", frozen)]
struct PyGraph {
    inner: DirectedGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(node_count: usize, edges: Vec<(u32, u32)>) -> PyResult<Self> {
        let (inner, _) = DirectedGraph::from_edges(node_count, edges).map_err(py_err)?;
        Ok(PyGraph { inner })
    }

    #[staticmethod]
    fn erdos_renyi(py: Python<'_>, n: usize, p: f64, seed: u64) -> PyResult<Self> {
        let inner = py
            .detach(|| graph::generate_er(n, p, seed))
            .map_err(py_err)?;
        Ok(PyGraph { inner })
    }

    /// Loads an edge list; ids are remapped unless the file has a
    /// `# nodes N` header.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let f = File::open(path).map_err(|e| py_err(e.into()))?;
        let loaded = graph::load_edge_list(BufReader::new(f)).map_err(py_err)?;
        Ok(PyGraph {
            inner: loaded.graph,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let f = File::create(path).map_err(|e| py_err(e.into()))?;
        graph::write_edge_list(&self.inner, BufWriter::new(f)).map_err(py_err)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn in_neighbors(&self, v: u32) -> PyResult<Vec<u32>> {
        self.inner.indegree(NodeId(v)).map_err(py_err)?;
        Ok(self
            .inner
            .in_neighbors(NodeId(v))
            .iter()
            .map(|u| u.0)
            .collect())
    }

    fn out_neighbors(&self, v: u32) -> PyResult<Vec<u32>> {
        self.inner.outdegree(NodeId(v)).map_err(py_err)?;
        Ok(self
            .inner
            .out_neighbors(NodeId(v))
            .iter()
            .map(|u| u.0)
            .collect())
    }

    fn indegree(&self, v: u32) -> PyResult<usize> {
        self.inner.indegree(NodeId(v)).map_err(py_err)
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        self.inner.edges().map(|(u, v)| (u.0, v.0)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, edges={})",
            self.inner.node_count(),
            self.inner.edge_count()
        )
    }
}

/// Per-category shift histograms conditioned on incoming toxicity.
#[pyclass(name = "ShiftDistribution", frozen)]
struct PyShiftDistribution {
    inner: behavior::ShiftDistribution,
}

#[pymethods]
impl PyShiftDistribution {
    #[staticmethod]
    #[pyo3(signature = (bins = 20))]
    fn synthetic(bins: usize) -> PyResult<Self> {
        Ok(PyShiftDistribution {
            inner: behavior::ShiftDistribution::synthetic(bins).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn point_mass(shift: f64) -> PyResult<Self> {
        Ok(PyShiftDistribution {
            inner: behavior::ShiftDistribution::point_mass(shift).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let f = File::open(path).map_err(|e| py_err(e.into()))?;
        Ok(PyShiftDistribution {
            inner: behavior::load_shift_distribution(f).map_err(py_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let f = File::create(path).map_err(|e| py_err(e.into()))?;
        self.inner.write_csv(BufWriter::new(f)).map_err(py_err)
    }

    fn expected_shift(&self, category_name: &str, avg_in_tox: f64) -> PyResult<f64> {
        self.inner
            .expected_shift(category(category_name)?, avg_in_tox)
            .map_err(py_err)
    }
}

/// Weekly `(week, total_toxicity, mean_toxicity, active_nodes)` rows of one
/// run. Nodes at or beyond `user_count` (default: all nodes) are peace-bots.
#[pyfunction]
#[pyo3(signature = (graph, shifts, weeks = 8, hops_per_week = 4, seed = 0, seed_fraction = 0.01,
                    initial_toxicity = (0.5, 1.0), changing_fraction = 0.47, user_count = None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    graph: &PyGraph,
    shifts: &PyShiftDistribution,
    weeks: usize,
    hops_per_week: usize,
    seed: u64,
    seed_fraction: f64,
    initial_toxicity: (f64, f64),
    changing_fraction: f64,
    user_count: Option<usize>,
) -> PyResult<Vec<(usize, f64, f64, usize)>> {
    let users = user_count.unwrap_or(graph.inner.node_count());
    let config = SimulationConfig {
        kiter: weeks * hops_per_week,
        hops_per_week,
        seeds: SeedSpec::Fraction(seed_fraction),
        initial_toxicity,
        seed,
        ..SimulationConfig::default()
    };
    let series = py
        .detach(|| {
            let profile: CategoryProfile = behavior::assign_categories(
                users,
                CategoryFractions::default(),
                changing_fraction,
                seed,
            )?;
            engine::run(
                &graph.inner,
                &profile,
                &shifts.inner,
                &behavior::TransitionMatrix::default(),
                &config,
            )
        })
        .map_err(py_err)?;
    Ok(series
        .rows
        .iter()
        .map(|r| (r.week, r.total_toxicity, r.mean_toxicity, r.active_nodes))
        .collect())
}

/// Returns the augmented graph and the chosen targets.
#[pyfunction]
fn deploy_bots(
    graph: &PyGraph,
    n_bots: usize,
    strategy: &str,
    seed: u64,
) -> PyResult<(PyGraph, Vec<u32>)> {
    let strategy: PlacementStrategy = strategy.parse().map_err(py_err)?;
    let d = intervention::deploy_bots(&graph.inner, n_bots, strategy, seed).map_err(py_err)?;
    Ok((
        PyGraph { inner: d.graph },
        d.targets.iter().map(|t| t.0).collect(),
    ))
}

#[pyfunction]
fn percentage_reduction(baseline_total: f64, intervened_total: f64) -> PyResult<f64> {
    intervention::percentage_reduction(baseline_total, intervened_total).map_err(py_err)
}

#[pyfunction]
fn bot_effect_on_average(avg: f64, indeg: usize) -> f64 {
    intervention::bot_effect_on_average(avg, indeg)
}

/// `(H, p_value)`.
#[pyfunction]
fn kruskal_wallis(groups: Vec<Vec<f64>>) -> PyResult<(f64, f64)> {
    let kw = analytics::kruskal_wallis(&groups).map_err(py_err)?;
    Ok((kw.h, kw.p_value))
}

/// Category name for every value.
#[pyfunction]
fn iqr_categorize(values: Vec<f64>) -> PyResult<Vec<&'static str>> {
    let (_, cats) = analytics::iqr_categorize(&values).map_err(py_err)?;
    Ok(cats.into_iter().map(UserCategory::name).collect())
}

/// `label -> (x, expected, homophilous)`; `None` labels are left out.
#[pyfunction]
#[pyo3(signature = (graph, labels, margin = analytics::DEFAULT_HOMOPHILY_MARGIN))]
fn homophily(
    graph: &PyGraph,
    labels: Vec<Option<String>>,
    margin: f64,
) -> PyResult<BTreeMap<String, (f64, f64, bool)>> {
    let r = analytics::homophily(&graph.inner, &labels, margin).map_err(py_err)?;
    Ok(r.labels
        .into_iter()
        .map(|l| (l.label, (l.x, l.expected, l.homophilous)))
        .collect())
}

/// Runs a sweep from `key = value` text and returns reduction rows
/// `(bots, strategy, mean_pct, std_pct)`. Writes outputs when `out_dir` is set.
#[pyfunction]
#[pyo3(signature = (config = "", out_dir = None))]
fn run_experiment(
    py: Python<'_>,
    config: &str,
    out_dir: Option<&str>,
) -> PyResult<Vec<(usize, String, f64, f64)>> {
    let mut spec = ExperimentSpec::default();
    spec.apply_text(config).map_err(py_err)?;
    let out = py
        .detach(|| harness::run_experiment(&spec))
        .map_err(py_err)?;
    if let Some(dir) = out_dir {
        out.write_outputs(std::path::Path::new(dir))
            .map_err(py_err)?;
    }
    Ok(out
        .table
        .rows
        .iter()
        .map(|r| (r.cell.bots, r.cell.strategy.to_string(), r.mean, r.std))
        .collect())
}

#[pymodule]
fn toxspread(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyShiftDistribution>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(deploy_bots, m)?)?;
    m.add_function(wrap_pyfunction!(percentage_reduction, m)?)?;
    m.add_function(wrap_pyfunction!(bot_effect_on_average, m)?)?;
    m.add_function(wrap_pyfunction!(kruskal_wallis, m)?)?;
    m.add_function(wrap_pyfunction!(iqr_categorize, m)?)?;
    m.add_function(wrap_pyfunction!(homophily, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
