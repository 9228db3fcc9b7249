//! Python bindings: bundles, distributions, geodesics and the headline
//! experiments. Structured results cross the boundary as Python dicts.

use ::fpplab as core;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use core::coarse::TripleSelection;
use core::experiments::{self, CrossingMode, MarginPolicy, MidpointSpec, SearchMode, WeightSource};
use core::fpp::{validate_distribution, DistributionSpec, EdgeDistribution, LazyWeights, SeedSpec};
use core::generators::{build_bundle, GeneratorSpec, GraphBundle};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn experiment_err(e: experiments::ExperimentError) -> PyErr {
    match e {
        experiments::ExperimentError::Runtime(m) => PyRuntimeError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A generated graph with its origin and marked geodesic.
#[pyclass(name = "Bundle", module = "fpplab", frozen)]
struct PyBundle {
    inner: GraphBundle,
    weights: Option<core::fpp::WeightAssignment>,
}

impl PyBundle {
    fn build(spec: GeneratorSpec) -> PyResult<Self> {
        let (inner, weights) = build_bundle(&spec, None).map_err(value_err)?;
        Ok(PyBundle { inner, weights })
    }
}

#[pymethods]
impl PyBundle {
    /// Box `[-L, L]^dim` in the cubic lattice.
    #[staticmethod]
    fn lattice(dim: u32, half_width: u32) -> PyResult<Self> {
        Self::build(GeneratorSpec::Lattice { dim, half_width })
    }

    #[staticmethod]
    fn tree(degree: u32, depth: u32) -> PyResult<Self> {
        Self::build(GeneratorSpec::Tree { degree, depth })
    }

    /// Ball of `layers` face layers in the `{p, q}` tiling.
    #[staticmethod]
    fn tiling(p: u32, q: u32, layers: u32) -> PyResult<Self> {
        Self::build(GeneratorSpec::Tiling { p, q, layers })
    }

    /// Planar box with cheap square contours; carries its own weights.
    #[staticmethod]
    #[pyo3(signature = (half_width, sizes=None, cheap=0.1, default=1.0))]
    fn bubble(half_width: u32, sizes: Option<Vec<u32>>, cheap: f64, default: f64) -> PyResult<Self> {
        Self::build(GeneratorSpec::Bubble {
            half_width,
            sizes,
            cheap,
            default,
        })
    }

    /// Any generator block, given as a JSON string.
    #[staticmethod]
    fn from_json(spec: &str) -> PyResult<Self> {
        Self::build(serde_json::from_str(spec).map_err(value_err)?)
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.graph.vertex_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.graph.edge_count()
    }

    #[getter]
    fn origin(&self) -> u32 {
        self.inner.origin
    }

    #[getter]
    fn safe_radius(&self) -> u32 {
        self.inner.safe_radius
    }

    #[getter]
    fn geodesic(&self) -> Vec<u32> {
        self.inner.geodesic.vertices().to_vec()
    }

    #[getter]
    fn has_weights(&self) -> bool {
        self.weights.is_some()
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        self.inner.graph.edges().to_vec()
    }

    /// `(x_n, y_n)` at hop distance `n` from the origin along `γ_0`.
    fn symmetric_pair(&self, n: usize) -> PyResult<(u32, u32)> {
        self.inner
            .symmetric_pair(n)
            .ok_or_else(|| PyValueError::new_err(format!("n = {n} exceeds the marked geodesic")))
    }

    fn hop_distance(&self, u: u32, v: u32) -> PyResult<u32> {
        self.inner.graph.hop_distance(u, v).map_err(value_err)
    }

    fn describe(&self) -> String {
        self.inner.describe()
    }

    fn __repr__(&self) -> String {
        format!(
            "Bundle(vertices={}, edges={}, safe_radius={})",
            self.inner.graph.vertex_count(),
            self.inner.graph.edge_count(),
            self.inner.safe_radius
        )
    }
}

/// Edge-length law on `(0, ∞)`.
#[pyclass(name = "Distribution", module = "fpplab", frozen)]
struct PyDistribution {
    inner: EdgeDistribution,
}

impl PyDistribution {
    fn build(spec: DistributionSpec) -> PyResult<Self> {
        Ok(PyDistribution {
            inner: validate_distribution(&spec).map_err(value_err)?,
        })
    }
}

#[pymethods]
impl PyDistribution {
    #[staticmethod]
    #[pyo3(signature = (rate=1.0))]
    fn exponential(rate: f64) -> PyResult<Self> {
        Self::build(DistributionSpec::Exponential { rate })
    }

    #[staticmethod]
    fn uniform(low: f64, high: f64) -> PyResult<Self> {
        Self::build(DistributionSpec::Uniform { low, high })
    }

    #[staticmethod]
    fn constant(value: f64) -> PyResult<Self> {
        Self::build(DistributionSpec::Constant { value })
    }

    /// Atoms as `(value, probability)` pairs.
    #[staticmethod]
    fn discrete(atoms: Vec<(f64, f64)>) -> PyResult<Self> {
        Self::build(DistributionSpec::Discrete { atoms })
    }

    #[staticmethod]
    fn from_json(spec: &str) -> PyResult<Self> {
        Self::build(serde_json::from_str(spec).map_err(value_err)?)
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn cdf(&self, t: f64) -> f64 {
        self.inner.cdf(t)
    }

    fn quantile(&self, u: f64) -> PyResult<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(PyValueError::new_err("u must lie in [0, 1]"));
        }
        Ok(self.inner.quantile(u))
    }

    /// Weights of `edges` for trial `trial` of master seed `seed`.
    fn sample(&self, seed: u64, trial: u64, edges: Vec<u32>) -> Vec<f64> {
        use core::fpp::EdgeWeights;
        let w = LazyWeights::new(&self.inner, SeedSpec::new(seed, trial));
        edges.into_iter().map(|e| w.weight(e)).collect()
    }
}

/// Selected `ω`-geodesic from `u` to `v` and its length, for the weights of
/// `(seed, trial)`.
#[pyfunction]
fn geodesic(
    py: Python<'_>,
    bundle: &PyBundle,
    dist: &PyDistribution,
    seed: u64,
    trial: u64,
    u: u32,
    v: u32,
) -> PyResult<(Vec<u32>, f64)> {
    py.detach(|| {
        let w = LazyWeights::new(&dist.inner, SeedSpec::new(seed, trial));
        core::metric::weighted_geodesic_with_length(&bundle.inner.graph, &w, u, v)
    })
    .map(|(p, d)| (p.into_vertices(), d))
    .map_err(value_err)
}

fn weight_source<'a>(bundle: &'a PyBundle, dist: Option<&'a PyDistribution>) -> PyResult<WeightSource<'a>> {
    match (dist, &bundle.weights) {
        (Some(d), _) => Ok(WeightSource::Random(&d.inner)),
        (None, Some(w)) => Ok(WeightSource::Fixed(w)),
        (None, None) => Err(PyValueError::new_err("a distribution is required for this bundle")),
    }
}

/// Crossing frequency of `ball(o, k_a)` by the geodesic from `x_n` to `y_n`.
///
/// `margin=None` keeps `x_n, y_n` within half the safe radius; an integer
/// requires `n + k_a + margin <= safe_radius` instead.
#[pyfunction]
#[pyo3(signature = (bundle, dist, n_values, k_a, trials, seed, margin=None, any_geodesic=false))]
#[allow(clippy::too_many_arguments)]
fn midpoint_probability<'py>(
    py: Python<'py>,
    bundle: &PyBundle,
    dist: Option<&PyDistribution>,
    n_values: Vec<usize>,
    k_a: u32,
    trials: u64,
    seed: u64,
    margin: Option<u32>,
    any_geodesic: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = MidpointSpec {
        seed,
        trials,
        n_values,
        k_a,
        margin: margin.map_or(MarginPolicy::Half, MarginPolicy::Additive),
        crossing: if any_geodesic {
            CrossingMode::Any
        } else {
            CrossingMode::Selected
        },
        search: SearchMode::Auto,
        excursion_multiple: None,
    };
    let weights = weight_source(bundle, dist)?;
    let result = py
        .detach(|| experiments::midpoint_probability(&bundle.inner, weights, &spec))
        .map_err(experiment_err)?;
    to_py(py, &result)
}

/// Largest thinness over all triangles (small graphs) or a seeded sample.
#[pyfunction]
#[pyo3(signature = (bundle, triples=None, seed=0))]
fn sample_thinness(py: Python<'_>, bundle: &PyBundle, triples: Option<usize>, seed: u64) -> PyResult<u32> {
    let sel = triples.map_or(TripleSelection::All, TripleSelection::Sample);
    py.detach(|| core::coarse::sample_thinness(&bundle.inner.graph, sel, seed))
        .map(|r| r.delta)
        .map_err(value_err)
}

/// Closed-form bound on `P(|γ|_ω <= ε n)` for a fixed path of length `n`.
#[pyfunction]
fn short_path_bound<'py>(py: Python<'py>, epsilon: f64, delta: f64, lam: f64, n: u64) -> PyResult<Bound<'py, PyAny>> {
    let b = core::bounds::short_path_bound(epsilon, delta, lam, n).map_err(value_err)?;
    to_py(py, &b)
}

/// Runs a config file as the `run` subcommand would; returns written paths.
#[pyfunction]
#[pyo3(signature = (config, out_dir, threads=None, seed=None))]
fn run_config(py: Python<'_>, config: &str, out_dir: &str, threads: Option<usize>, seed: Option<u64>) -> PyResult<Vec<String>> {
    py.detach(|| core::cli::run(config.as_ref(), out_dir.as_ref(), threads, seed))
        .map(|m| m.outputs)
        .map_err(|e| match e {
            core::cli::CliError::Runtime(m) => PyRuntimeError::new_err(m),
            core::cli::CliError::Config(m) | core::cli::CliError::Infeasible(m) => PyValueError::new_err(m),
        })
}

#[pymodule]
#[pyo3(name = "fpplab")]
fn fpplab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBundle>()?;
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(geodesic, m)?)?;
    m.add_function(wrap_pyfunction!(midpoint_probability, m)?)?;
    m.add_function(wrap_pyfunction!(sample_thinness, m)?)?;
    m.add_function(wrap_pyfunction!(short_path_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
