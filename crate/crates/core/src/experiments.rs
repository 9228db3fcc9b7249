//! Monte Carlo experiments over pinned seeds.
//!
//! Trial `t` uses the weights keyed by `(seed, t)`, shared by every scale `n`,
//! so the geodesics `g_n` of one trial are nested in the same `ω`. Per-trial
//! results are collected in ascending trial order; thread count never changes
//! an output bit.

use std::fmt::Write as _;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};
use thiserror::Error;

use crate::bounds::{
    lln_envelope_anchored, linear_envelope_fit, short_path_bound, BoundConstants, ShortPathBound,
};
use crate::coarse::{
    dms_gauge, phi_profile, sample_thinness, CoarseError, ExcursionContext, GaugeOptions, PhiOptions, SideFilter,
    TripleSelection,
};
use crate::fpp::{counter_uniform, CounterRng, EdgeDistribution, EdgeWeights, LazyWeights, SeedSpec, WeightAssignment};
use crate::generators::{bubble_interior, sup_norm, BubbleSpec, GeneratorSpec, GraphBundle};
use crate::graph::{Graph, Path, VertexId, VertexSet};
use crate::metric::{any_geodesic_meets, dijkstra, MetricError, SearchLimits, SearchWorkspace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("infeasible experiment: {0}")]
    Infeasible(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl From<MetricError> for ExperimentError {
    fn from(e: MetricError) -> Self {
        ExperimentError::Runtime(e.to_string())
    }
}

impl From<CoarseError> for ExperimentError {
    fn from(e: CoarseError) -> Self {
        match e {
            CoarseError::InvalidParams(m) => ExperimentError::Config(m),
            other => ExperimentError::Infeasible(other.to_string()),
        }
    }
}

/// How far `x_n`, `y_n` must stay from the truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MarginPolicy {
    /// `x_n, y_n ∈ B(o, safe_radius / 2)`.
    #[default]
    Half,
    /// `n + K_A + margin <= safe_radius`.
    Additive(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CrossingMode {
    /// The tie-rule geodesic meets `A`.
    #[default]
    Selected,
    /// Some co-optimal geodesic meets `A`.
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Bidirectional for atomless laws, tie-rule search otherwise.
    #[default]
    Auto,
    Selected,
    Bidirectional,
}

/// Edge lengths for a run: i.i.d. per trial, or one fixed assignment.
#[derive(Debug, Clone, Copy)]
pub enum WeightSource<'a> {
    Random(&'a EdgeDistribution),
    Fixed(&'a WeightAssignment),
}

impl<'a> WeightSource<'a> {
    fn trial(&self, seed: u64, trial: u64, scale: f64) -> TrialWeights<'a> {
        match *self {
            WeightSource::Random(d) => TrialWeights::Lazy(LazyWeights::new(d, SeedSpec::new(seed, trial)).scaled(scale)),
            WeightSource::Fixed(w) => TrialWeights::Fixed(w, scale),
        }
    }

    fn atomless(&self) -> bool {
        match self {
            WeightSource::Random(d) => d.is_atomless(),
            WeightSource::Fixed(_) => false,
        }
    }

    fn mean(&self) -> f64 {
        match self {
            WeightSource::Random(d) => d.mean(),
            WeightSource::Fixed(w) => w.as_slice().iter().sum::<f64>() / w.len() as f64,
        }
    }
}

enum TrialWeights<'a> {
    Lazy(LazyWeights<'a>),
    Fixed(&'a WeightAssignment, f64),
}

impl EdgeWeights for TrialWeights<'_> {
    #[inline]
    fn weight(&self, e: crate::graph::EdgeId) -> f64 {
        match self {
            TrialWeights::Lazy(l) => l.weight(e),
            TrialWeights::Fixed(w, s) if *s == 1.0 => w.weight(e),
            TrialWeights::Fixed(w, s) => s * w.weight(e),
        }
    }
}

/// At most one search workspace per worker thread.
struct WorkspacePool {
    vertices: usize,
    free: Mutex<Vec<SearchWorkspace>>,
}

impl WorkspacePool {
    fn new(vertices: usize) -> Self {
        WorkspacePool {
            vertices,
            free: Mutex::new(Vec::new()),
        }
    }

    fn with<T>(&self, f: impl FnOnce(&mut SearchWorkspace) -> T) -> T {
        let taken = self.free.lock().unwrap().pop();
        let mut ws = taken.unwrap_or_else(|| SearchWorkspace::new(self.vertices));
        let out = f(&mut ws);
        self.free.lock().unwrap().push(ws);
        out
    }
}

fn resolve_search(mode: SearchMode, weights: &WeightSource<'_>) -> SearchMode {
    match mode {
        SearchMode::Auto if weights.atomless() => SearchMode::Bidirectional,
        SearchMode::Auto => SearchMode::Selected,
        m => m,
    }
}

fn geodesic(
    ws: &mut SearchWorkspace,
    g: &Graph,
    w: &TrialWeights<'_>,
    u: VertexId,
    v: VertexId,
    mode: SearchMode,
) -> Result<(Path, f64), MetricError> {
    match mode {
        SearchMode::Bidirectional => ws.geodesic_bidirectional(g, w, u, v),
        _ => ws.geodesic(g, w, u, v),
    }
}

/// Checks that every scale keeps `x_n`, `y_n` and `A` inside the truncation.
pub fn check_scales(bundle: &GraphBundle, n_values: &[usize], k_a: u32, margin: MarginPolicy) -> Result<(), ExperimentError> {
    if n_values.is_empty() {
        return Err(ExperimentError::Config("n_values must not be empty".into()));
    }
    let safe = bundle.safe_radius as usize;
    for &n in n_values {
        if n == 0 {
            return Err(ExperimentError::Config("n_values must be >= 1".into()));
        }
        if n > bundle.geodesic_reach() {
            return Err(ExperimentError::Infeasible(format!(
                "n = {n} exceeds the marked geodesic's reach {} from the origin",
                bundle.geodesic_reach()
            )));
        }
        match margin {
            MarginPolicy::Half => {
                if 2 * n > safe {
                    return Err(ExperimentError::Infeasible(format!(
                        "n = {n} exceeds safe_radius / 2 = {}/2 (margin policy half)",
                        safe
                    )));
                }
                if n + k_a as usize > safe {
                    return Err(ExperimentError::Infeasible(format!(
                        "n + K_A = {n} + {k_a} exceeds safe_radius {safe}"
                    )));
                }
            }
            MarginPolicy::Additive(m) => {
                if n + k_a as usize + m as usize > safe {
                    return Err(ExperimentError::Infeasible(format!(
                        "n + K_A + margin = {n} + {k_a} + {m} exceeds safe_radius {safe}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Exact two-sided Clopper–Pearson interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, level: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let alpha = 1.0 - level;
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(k as f64, (n - k + 1) as f64).unwrap().inverse_cdf(alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new((k + 1) as f64, (n - k) as f64).unwrap().inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MidpointSpec {
    pub seed: u64,
    pub trials: u64,
    pub n_values: Vec<usize>,
    pub k_a: u32,
    #[serde(default)]
    pub margin: MarginPolicy,
    #[serde(default)]
    pub crossing: CrossingMode,
    #[serde(default)]
    pub search: SearchMode,
    /// When set, non-crossing geodesics are decomposed with
    /// `R = ⌊d(g_n, o) / multiple⌋`.
    #[serde(default)]
    pub excursion_multiple: Option<u32>,
}

/// One `(n, trial)` geodesic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: u64,
    pub crossed: bool,
    pub touches_boundary: bool,
    pub d_omega: f64,
    pub hops: usize,
    /// `d(g_n, o)` in hops.
    pub origin_distance: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MidpointScale {
    pub n: usize,
    pub trials: u64,
    pub excluded: u64,
    pub crossings: u64,
    pub estimate: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcursionSummary {
    pub multiple: u32,
    pub attempted: u64,
    pub decomposed: u64,
    /// Smallest `gap / R` among decompositions that avoid `B(o, multiple R)`.
    pub min_gap_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MidpointResult {
    pub scales: Vec<MidpointScale>,
    pub search: SearchMode,
    pub constants: Option<BoundConstants>,
    pub excursions: Option<ExcursionSummary>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl MidpointResult {
    pub fn estimate(&self, n: usize) -> Option<f64> {
        self.scales.iter().find(|s| s.n == n).and_then(|s| s.estimate)
    }
}

fn validate_trials(trials: u64) -> Result<(), ExperimentError> {
    if trials == 0 {
        Err(ExperimentError::Config("trials must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// Shared per-scale geodesic loop for midpoint-style experiments.
struct ScaleRunner<'a> {
    bundle: &'a GraphBundle,
    weights: WeightSource<'a>,
    scale: f64,
    from_origin: Vec<u32>,
    pool: WorkspacePool,
    search: SearchMode,
}

struct Sample {
    path: Path,
    d_omega: f64,
    touches_boundary: bool,
    origin_distance: u32,
}

impl<'a> ScaleRunner<'a> {
    fn new(bundle: &'a GraphBundle, weights: WeightSource<'a>, scale: f64, search: SearchMode) -> Self {
        ScaleRunner {
            bundle,
            weights,
            scale,
            from_origin: bundle.graph.bfs_distances(bundle.origin),
            pool: WorkspacePool::new(bundle.graph.vertex_count()),
            search: resolve_search(search, &weights),
        }
    }

    fn samples(&self, seed: u64, trial: u64, n_values: &[usize]) -> Result<Vec<Sample>, MetricError> {
        let w = self.weights.trial(seed, trial, self.scale);
        let g = &self.bundle.graph;
        self.pool.with(|ws| {
            n_values
                .iter()
                .map(|&n| {
                    let (x, y) = self.bundle.symmetric_pair(n).expect("scales checked");
                    let (path, d_omega) = geodesic(ws, g, &w, x, y, self.search)?;
                    let touches_boundary = path.vertices().iter().any(|&v| self.bundle.boundary.contains(v));
                    let origin_distance = path
                        .vertices()
                        .iter()
                        .map(|&v| self.from_origin[v as usize])
                        .min()
                        .unwrap();
                    Ok(Sample {
                        path,
                        d_omega,
                        touches_boundary,
                        origin_distance,
                    })
                })
                .collect()
        })
    }

    fn all_samples(&self, seed: u64, trials: u64, n_values: &[usize]) -> Result<Vec<Vec<Sample>>, ExperimentError> {
        (0..trials)
            .into_par_iter()
            .map(|t| self.samples(seed, t, n_values).map_err(ExperimentError::from))
            .collect()
    }
}

/// Frequency with which the `ω`-geodesic from `x_n` to `y_n` meets
/// `A = B(o, K_A)`. Trials whose geodesic touches the boundary are excluded
/// and counted.
pub fn midpoint_probability(
    bundle: &GraphBundle,
    weights: WeightSource<'_>,
    spec: &MidpointSpec,
) -> Result<MidpointResult, ExperimentError> {
    midpoint_probability_scaled(bundle, weights, spec, 1.0)
}

/// As [`midpoint_probability`] with every edge length multiplied by `scale`.
pub fn midpoint_probability_scaled(
    bundle: &GraphBundle,
    weights: WeightSource<'_>,
    spec: &MidpointSpec,
    scale: f64,
) -> Result<MidpointResult, ExperimentError> {
    validate_trials(spec.trials)?;
    check_scales(bundle, &spec.n_values, spec.k_a, spec.margin)?;
    if spec.excursion_multiple == Some(0) {
        return Err(ExperimentError::Config("excursion_multiple must be >= 1".into()));
    }
    let runner = ScaleRunner::new(bundle, weights, scale, spec.search);
    let samples = runner.all_samples(spec.seed, spec.trials, &spec.n_values)?;
    let g = &bundle.graph;
    let a_set = (spec.crossing == CrossingMode::Any).then(|| g.ball(bundle.origin, spec.k_a));
    let mut records = Vec::with_capacity(samples.len() * spec.n_values.len());
    for (t, per_n) in samples.iter().enumerate() {
        for (s, &n) in per_n.iter().zip(&spec.n_values) {
            let crossed = match &a_set {
                None => s.origin_distance <= spec.k_a,
                Some(a) => {
                    let (x, y) = bundle.symmetric_pair(n).unwrap();
                    let w = weights.trial(spec.seed, t as u64, scale);
                    any_geodesic_meets(g, &w, x, y, a, 1e-12)?
                }
            };
            records.push(TrialRecord {
                n,
                trial: t as u64,
                crossed,
                touches_boundary: s.touches_boundary,
                d_omega: s.d_omega,
                hops: s.path.hop_length(),
                origin_distance: s.origin_distance,
            });
        }
    }
    let scales = spec
        .n_values
        .iter()
        .map(|&n| {
            let rows = records.iter().filter(|r| r.n == n);
            let excluded = rows.clone().filter(|r| r.touches_boundary).count() as u64;
            let crossings = rows.filter(|r| !r.touches_boundary && r.crossed).count() as u64;
            let used = spec.trials - excluded;
            let (ci_low, ci_high) = clopper_pearson(crossings, used, 0.95);
            MidpointScale {
                n,
                trials: spec.trials,
                excluded,
                crossings,
                estimate: (used > 0).then(|| crossings as f64 / used as f64),
                ci_low,
                ci_high,
            }
        })
        .collect();
    let constants = fit_constants(bundle, &weights, spec.seed, scale, &records);
    let excursions = match spec.excursion_multiple {
        None => None,
        Some(m) => Some(excursion_summary(bundle, &samples, m)?),
    };
    Ok(MidpointResult {
        scales,
        search: runner.search,
        constants,
        excursions,
        records,
    })
}

fn fit_constants(
    bundle: &GraphBundle,
    weights: &WeightSource<'_>,
    seed: u64,
    scale: f64,
    records: &[TrialRecord],
) -> Option<BoundConstants> {
    let b = scale * weights.mean();
    let w0 = weights.trial(seed, 0, scale);
    let along: Vec<f64> = bundle
        .graph
        .path_edges(&bundle.geodesic)
        .into_iter()
        .map(|e| w0.weight(e))
        .collect();
    let r0 = lln_envelope_anchored(&along, b, bundle.origin_index).r0;
    let samples: Vec<(u32, f64)> = records
        .iter()
        .filter(|r| !r.touches_boundary)
        .map(|r| (r.hops as u32, r.d_omega))
        .collect();
    let fit = linear_envelope_fit(&samples, 0.05).ok()?;
    Some(BoundConstants {
        b,
        r0,
        c: fit.c,
        r1: fit.r1,
        provenance: format!(
            "r0: trial 0 weights along the marked geodesic; c, r1: {} selected geodesics; seed {seed}",
            samples.len()
        ),
    })
}

fn excursion_summary(bundle: &GraphBundle, samples: &[Vec<Sample>], multiple: u32) -> Result<ExcursionSummary, ExperimentError> {
    let ctx = ExcursionContext::new(&bundle.graph, &bundle.geodesic, bundle.origin_index)?;
    let mut summary = ExcursionSummary {
        multiple,
        attempted: 0,
        decomposed: 0,
        min_gap_ratio: None,
    };
    for s in samples.iter().flatten() {
        let radius = s.origin_distance / multiple;
        if s.touches_boundary || radius == 0 {
            continue;
        }
        summary.attempted += 1;
        if let Some(rec) = ctx.decompose(&s.path, radius, multiple)? {
            summary.decomposed += 1;
            if rec.avoids_ball {
                let ratio = rec.gap as f64 / radius as f64;
                summary.min_gap_ratio = Some(summary.min_gap_ratio.map_or(ratio, |m: f64| m.min(ratio)));
            }
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilizationSpec {
    pub seed: u64,
    pub trials: u64,
    pub n_values: Vec<usize>,
    pub k_a: u32,
    #[serde(default)]
    pub margin: MarginPolicy,
    #[serde(default)]
    pub search: SearchMode,
    /// Smallest scale entering the core; defaults to the second-largest n.
    #[serde(default)]
    pub n_min: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizationTrial {
    pub trial: u64,
    pub geodesics: Vec<Path>,
    pub touches_boundary: Vec<bool>,
    /// Sorted vertices of `g_n` inside `B(o, K_A)`, per n.
    pub cores: Vec<Vec<VertexId>>,
    /// Vertices common to every `g_n` with `n >= n_min`, in `g_top` order.
    pub core: Vec<VertexId>,
    /// `g_top` from its first to its last core vertex; excursions out of
    /// the ball and back are included.
    pub segment: Vec<VertexId>,
    /// `segment` occurs contiguously in every `g_n` with `n >= n_min`.
    pub core_is_subpath: bool,
    pub stabilized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizationReport {
    pub n_values: Vec<usize>,
    pub n_min: usize,
    pub stabilized: u64,
    pub trials: u64,
    pub rate: f64,
    pub search: SearchMode,
    pub per_trial: Vec<StabilizationTrial>,
}

/// Whether `g_n ∩ B(o, K_A)` settles as `n` grows, one fixed `ω` per trial.
///
/// A trial is stabilized when the top two scales give the same non-empty set
/// and neither geodesic touches the boundary.
pub fn geodesic_stabilization(
    bundle: &GraphBundle,
    weights: WeightSource<'_>,
    spec: &StabilizationSpec,
) -> Result<StabilizationReport, ExperimentError> {
    validate_trials(spec.trials)?;
    if spec.n_values.len() < 3 || spec.n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::Config(
            "stabilization needs at least 3 strictly increasing n_values".into(),
        ));
    }
    check_scales(bundle, &spec.n_values, spec.k_a, spec.margin)?;
    let top = spec.n_values.len() - 1;
    let n_min = spec.n_min.unwrap_or(spec.n_values[top - 1]);
    if !spec.n_values.contains(&n_min) {
        return Err(ExperimentError::Config(format!("n_min = {n_min} is not among n_values")));
    }
    let runner = ScaleRunner::new(bundle, weights, 1.0, spec.search);
    let samples = runner.all_samples(spec.seed, spec.trials, &spec.n_values)?;
    let inside = |v: VertexId| runner.from_origin[v as usize] <= spec.k_a;
    let per_trial: Vec<StabilizationTrial> = samples
        .into_iter()
        .enumerate()
        .map(|(t, per_n)| {
            let cores: Vec<Vec<VertexId>> = per_n
                .iter()
                .map(|s| {
                    let mut c: Vec<VertexId> = s.path.vertices().iter().copied().filter(|&v| inside(v)).collect();
                    c.sort_unstable();
                    c.dedup();
                    c
                })
                .collect();
            let touches: Vec<bool> = per_n.iter().map(|s| s.touches_boundary).collect();
            let first = spec.n_values.iter().position(|&n| n == n_min).unwrap();
            let top_path = &per_n[top].path;
            let core: Vec<VertexId> = top_path
                .vertices()
                .iter()
                .copied()
                .filter(|v| cores[first..].iter().all(|c| c.binary_search(v).is_ok()))
                .collect();
            let segment: Vec<VertexId> = match (core.first(), core.last()) {
                (Some(&a), Some(&b)) => {
                    let verts = top_path.vertices();
                    let i = verts.iter().position(|&v| v == a).unwrap();
                    let j = verts.iter().position(|&v| v == b).unwrap();
                    verts[i..=j].to_vec()
                }
                _ => Vec::new(),
            };
            let core_is_subpath = !segment.is_empty()
                && per_n[first..].iter().all(|s| {
                    let verts = s.path.vertices();
                    verts.windows(segment.len()).any(|w| w == segment.as_slice())
                        || verts.windows(segment.len()).any(|w| w.iter().rev().eq(segment.iter()))
                });
            let stabilized =
                !cores[top].is_empty() && cores[top] == cores[top - 1] && !touches[top] && !touches[top - 1];
            StabilizationTrial {
                trial: t as u64,
                geodesics: per_n.into_iter().map(|s| s.path).collect(),
                touches_boundary: touches,
                cores,
                core,
                segment,
                core_is_subpath,
                stabilized,
            }
        })
        .collect();
    let stabilized = per_trial.iter().filter(|t| t.stabilized).count() as u64;
    Ok(StabilizationReport {
        n_values: spec.n_values.clone(),
        n_min,
        stabilized,
        trials: spec.trials,
        rate: stabilized as f64 / spec.trials as f64,
        search: runner.search,
        per_trial,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceSpec {
    pub seed: u64,
    pub trials: u64,
    pub n_values: Vec<usize>,
    #[serde(default)]
    pub margin: MarginPolicy,
    #[serde(default)]
    pub search: SearchMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceStats {
    pub samples: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of `variance` from the fourth central moment.
    pub se_variance: f64,
}

pub fn distance_stats(values: &[f64]) -> DistanceStats {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let m2 = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
    let m4 = values.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / m;
    let variance = if values.len() > 1 { m2 * m / (m - 1.0) } else { 0.0 };
    let se_variance = if values.len() > 3 {
        ((m4 - (m - 3.0) / (m - 1.0) * m2 * m2).max(0.0) / m).sqrt()
    } else {
        f64::NAN
    };
    DistanceStats {
        samples: values.len() as u64,
        mean,
        variance,
        se_variance,
    }
}

/// `d_ω(u, v)` statistics over `trials` independent weightings, per pair.
pub fn distance_statistics(
    g: &Graph,
    weights: WeightSource<'_>,
    pairs: &[(VertexId, VertexId)],
    trials: u64,
    seed: u64,
) -> Result<Vec<DistanceStats>, ExperimentError> {
    validate_trials(trials)?;
    let pool = WorkspacePool::new(g.vertex_count());
    let mode = resolve_search(SearchMode::Auto, &weights);
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let w = weights.trial(seed, t, 1.0);
            pool.with(|ws| {
                pairs
                    .iter()
                    .map(|&(u, v)| geodesic(ws, g, &w, u, v, mode).map(|r| r.1))
                    .collect::<Result<Vec<f64>, _>>()
            })
        })
        .collect::<Result<_, _>>()?;
    Ok((0..pairs.len())
        .map(|k| distance_stats(&per_trial.iter().map(|row| row[k]).collect::<Vec<_>>()))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariancePoint {
    pub n: usize,
    pub excluded: u64,
    pub stats: DistanceStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceProfile {
    pub points: Vec<VariancePoint>,
    /// Least-squares slope of `ln Var` on `ln n`; `None` if a variance is 0.
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

/// Ordinary least squares `y = a + s x`, returning `(s, se(s))`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, Option<f64>) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let se = (x.len() > 2).then(|| {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
            .sum();
        (rss / (k - 2.0) / sxx).sqrt()
    });
    (slope, se)
}

/// Variance of `d_ω(x_n, y_n)` per scale, with a log-log growth slope.
pub fn variance_profile(
    bundle: &GraphBundle,
    weights: WeightSource<'_>,
    spec: &VarianceSpec,
) -> Result<VarianceProfile, ExperimentError> {
    if spec.n_values.len() < 3 {
        return Err(ExperimentError::Config("variance profile needs at least 3 n_values".into()));
    }
    if spec.trials < 500 {
        return Err(ExperimentError::Config("variance profile needs at least 500 trials".into()));
    }
    check_scales(bundle, &spec.n_values, 0, spec.margin)?;
    let runner = ScaleRunner::new(bundle, weights, 1.0, spec.search);
    let samples = runner.all_samples(spec.seed, spec.trials, &spec.n_values)?;
    let mut records = Vec::new();
    for (t, per_n) in samples.iter().enumerate() {
        for (s, &n) in per_n.iter().zip(&spec.n_values) {
            records.push(TrialRecord {
                n,
                trial: t as u64,
                crossed: s.origin_distance == 0,
                touches_boundary: s.touches_boundary,
                d_omega: s.d_omega,
                hops: s.path.hop_length(),
                origin_distance: s.origin_distance,
            });
        }
    }
    let points: Vec<VariancePoint> = spec
        .n_values
        .iter()
        .map(|&n| {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.n == n).collect();
            let kept: Vec<f64> = rows.iter().filter(|r| !r.touches_boundary).map(|r| r.d_omega).collect();
            VariancePoint {
                n,
                excluded: (rows.len() - kept.len()) as u64,
                stats: distance_stats(&kept),
            }
        })
        .collect();
    let (slope, slope_se) = if points.iter().any(|p| !(p.stats.variance > 0.0)) {
        (None, None)
    } else {
        let x: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
        let y: Vec<f64> = points.iter().map(|p| p.stats.variance.ln()).collect();
        let (s, se) = ols_slope(&x, &y);
        (Some(s), se)
    };
    Ok(VarianceProfile {
        points,
        slope,
        slope_se,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShortPathSpec {
    pub seed: u64,
    pub trials: u64,
    pub path_length: usize,
    pub epsilon: f64,
    /// Target `F(δ)`; the threshold is `δ = F^{-1}(target)`.
    #[serde(default = "default_lambda_target")]
    pub lambda_target: f64,
}

fn default_lambda_target() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShortPathResult {
    pub path_length: usize,
    pub epsilon: f64,
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    pub standard_error: f64,
    pub bound: ShortPathBound,
    /// `estimate / bound`.
    pub ratio: f64,
    /// `estimate <= bound + 4 SE`.
    pub valid: bool,
    #[serde(skip)]
    pub lengths: Vec<f64>,
}

/// Picks `δ` so that `λ = F(δ)` lies in `[0.1, 0.3]`, nearest the target.
pub fn delta_policy(dist: &EdgeDistribution, target: f64) -> Result<(f64, f64), ExperimentError> {
    if !(0.1..=0.3).contains(&target) {
        return Err(ExperimentError::Config(format!("lambda_target {target} outside [0.1, 0.3]")));
    }
    let mut candidates = vec![target];
    candidates.extend((1..=20).map(|k| 0.1 + 0.01 * k as f64));
    for t in candidates {
        let delta = dist.quantile(t);
        let lambda = crate::fpp::cdf_probe(dist, delta);
        if delta > 0.0 && (0.1..=0.3).contains(&lambda) {
            return Ok((delta, lambda));
        }
    }
    Err(ExperimentError::Infeasible(
        "no threshold δ with F(δ) in [0.1, 0.3] for this distribution".into(),
    ))
}

/// Monte Carlo `P(|γ|_ω <= ε n)` for the first `n` edges of `γ_0`, against
/// the closed-form bound at the policy threshold.
pub fn empirical_short_path_probability(
    bundle: &GraphBundle,
    dist: &EdgeDistribution,
    spec: &ShortPathSpec,
) -> Result<ShortPathResult, ExperimentError> {
    validate_trials(spec.trials)?;
    let n = spec.path_length;
    if n == 0 || n > bundle.geodesic.hop_length() {
        return Err(ExperimentError::Infeasible(format!(
            "path_length {n} must be in 1..={} (marked geodesic length)",
            bundle.geodesic.hop_length()
        )));
    }
    if !(spec.epsilon > 0.0) {
        return Err(ExperimentError::Config("epsilon must be > 0".into()));
    }
    let (delta, lambda) = delta_policy(dist, spec.lambda_target)?;
    let bound = short_path_bound(spec.epsilon, delta, lambda, n as u64)
        .map_err(|e| ExperimentError::Infeasible(format!("{e} (δ from the F(δ) policy)")))?;
    let edges: Vec<u32> = bundle.graph.path_edges(&bundle.geodesic)[..n].to_vec();
    let lengths: Vec<f64> = (0..spec.trials as usize)
        .into_par_iter()
        .with_min_len(1024)
        .map(|t| {
            let seed = SeedSpec::new(spec.seed, t as u64);
            edges
                .iter()
                .map(|&e| dist.sample_from_uniform(counter_uniform(seed, e as u64)))
                .fold(0.0, |a, x| a + x)
        })
        .collect();
    let threshold = spec.epsilon * n as f64;
    let hits = lengths.iter().filter(|&&l| l <= threshold).count() as u64;
    let p = hits as f64 / spec.trials as f64;
    let se = (p * (1.0 - p) / spec.trials as f64).sqrt();
    Ok(ShortPathResult {
        path_length: n,
        epsilon: spec.epsilon,
        hits,
        trials: spec.trials,
        estimate: p,
        standard_error: se,
        ratio: p / bound.bound,
        valid: p <= bound.bound + 4.0 * se,
        bound,
        lengths,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleAvoidanceSpec {
    pub seed: u64,
    pub pairs: usize,
    /// 1-based contour index whose open interior is forbidden.
    #[serde(default = "default_contour")]
    pub contour: usize,
}

fn default_contour() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AvoidanceVerdict {
    pub u: VertexId,
    pub v: VertexId,
    pub distance: f64,
    pub restricted: f64,
    /// The distances agree, so some geodesic avoids the forbidden set and
    /// none is shorter through it.
    pub agree: bool,
    pub selected_avoids: bool,
}

/// Relative tolerance for comparing sums of the same edge lengths taken in
/// different orders.
pub const SUM_ORDER_TOLERANCE: f64 = 1e-9;

/// Compares `d_ω(u, v)` with the distance when `forbidden` may not be entered.
pub fn avoidance_verdict<W: EdgeWeights + ?Sized>(
    g: &Graph,
    weights: &W,
    u: VertexId,
    v: VertexId,
    forbidden: &VertexSet,
) -> Result<AvoidanceVerdict, ExperimentError> {
    if forbidden.contains(u) || forbidden.contains(v) {
        return Err(ExperimentError::Infeasible(format!("pair ({u}, {v}) lies inside the forbidden region")));
    }
    let free = dijkstra(g, weights, u, SearchLimits { forbidden: None, target: Some(v) });
    let held = dijkstra(
        g,
        weights,
        u,
        SearchLimits {
            forbidden: Some(forbidden),
            target: Some(v),
        },
    );
    let (distance, restricted) = (free.distance(v), held.distance(v));
    let agree = restricted.is_finite() && (restricted - distance).abs() <= SUM_ORDER_TOLERANCE * distance.max(1.0);
    let selected_avoids = free
        .path_to(v)
        .is_some_and(|p| p.vertices().iter().all(|&w| !forbidden.contains(w)));
    Ok(AvoidanceVerdict {
        u,
        v,
        distance,
        restricted,
        agree,
        selected_avoids,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BubbleAvoidanceReport {
    pub contour: usize,
    pub size: u32,
    pub verdicts: Vec<AvoidanceVerdict>,
    pub all_agree: bool,
}

fn bubble_spec_of(bundle: &GraphBundle) -> Result<BubbleSpec, ExperimentError> {
    match &bundle.spec {
        GeneratorSpec::Bubble {
            sizes: Some(sizes),
            cheap,
            default,
            ..
        } => Ok(BubbleSpec {
            sizes: sizes.clone(),
            cheap: *cheap,
            default: *default,
        }),
        _ => Err(ExperimentError::Config("bubble avoidance needs a bubble lattice bundle".into())),
    }
}

/// Far opposite-side pairs outside the outermost contour, seeded.
pub fn bubble_pairs(bundle: &GraphBundle, spec: &BubbleSpec, count: usize, seed: u64) -> Vec<(VertexId, VertexId)> {
    let outer = *spec.sizes.last().unwrap() as i64;
    let outside: Vec<VertexId> = (0..bundle.graph.vertex_count() as VertexId)
        .filter(|&v| sup_norm(bundle, v).unwrap() > outer)
        .collect();
    let up: Vec<VertexId> = outside.iter().copied().filter(|&v| bundle.side(v) > 0).collect();
    let down: Vec<VertexId> = outside.iter().copied().filter(|&v| bundle.side(v) < 0).collect();
    let mut rng = CounterRng::new(seed, 0xb0b);
    (0..count)
        .map(|_| {
            let u = up[rng.below(up.len() as u64) as usize];
            let v = down[rng.below(down.len() as u64) as usize];
            (u, v)
        })
        .collect()
}

/// Geodesics between far opposite-side pairs never need the interior of `C_k`.
pub fn bubble_avoidance_check(
    bundle: &GraphBundle,
    weights: &WeightAssignment,
    pairs: &[(VertexId, VertexId)],
    contour: usize,
) -> Result<BubbleAvoidanceReport, ExperimentError> {
    let spec = bubble_spec_of(bundle)?;
    if contour == 0 || contour > spec.sizes.len() {
        return Err(ExperimentError::Config(format!(
            "contour {contour} out of range 1..={}",
            spec.sizes.len()
        )));
    }
    let interior = bubble_interior(bundle, &spec, contour - 1);
    let outer = *spec.sizes.last().unwrap() as i64;
    for &(u, v) in pairs {
        for w in [u, v] {
            if sup_norm(bundle, w).unwrap() <= outer {
                return Err(ExperimentError::Infeasible(format!("pair vertex {w} lies inside a bubble")));
            }
        }
    }
    let verdicts: Vec<AvoidanceVerdict> = pairs
        .par_iter()
        .map(|&(u, v)| avoidance_verdict(&bundle.graph, weights, u, v, &interior))
        .collect::<Result<_, _>>()?;
    let all_agree = verdicts.iter().all(|v| v.agree);
    Ok(BubbleAvoidanceReport {
        contour,
        size: spec.sizes[contour - 1],
        verdicts,
        all_agree,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub factor: f64,
    pub geodesics_checked: u64,
    pub geodesics_identical: bool,
    pub crossings_identical: bool,
    /// `max |d'/(factor d) - 1|`.
    pub max_relative_error: f64,
}

/// Reruns a midpoint configuration with every length multiplied by `factor`.
pub fn scaling_invariance(
    bundle: &GraphBundle,
    weights: WeightSource<'_>,
    spec: &MidpointSpec,
    factor: f64,
) -> Result<ScalingReport, ExperimentError> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(ExperimentError::Config("scale factor must be > 0".into()));
    }
    check_scales(bundle, &spec.n_values, spec.k_a, spec.margin)?;
    let base = ScaleRunner::new(bundle, weights, 1.0, spec.search);
    let scaled = ScaleRunner::new(bundle, weights, factor, spec.search);
    let a = base.all_samples(spec.seed, spec.trials, &spec.n_values)?;
    let b = scaled.all_samples(spec.seed, spec.trials, &spec.n_values)?;
    let mut report = ScalingReport {
        factor,
        geodesics_checked: 0,
        geodesics_identical: true,
        crossings_identical: true,
        max_relative_error: 0.0,
    };
    for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
        report.geodesics_checked += 1;
        report.geodesics_identical &= x.path == y.path;
        report.crossings_identical &= (x.origin_distance <= spec.k_a) == (y.origin_distance <= spec.k_a);
        let rel = (y.d_omega / (factor * x.d_omega) - 1.0).abs();
        report.max_relative_error = report.max_relative_error.max(rel);
    }
    Ok(report)
}

/// Experiment block of a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentSpec {
    Midpoint(MidpointSpec),
    Stabilization(StabilizationSpec),
    Variance(VarianceSpec),
    ShortPath(ShortPathSpec),
    BubbleAvoidance(BubbleAvoidanceSpec),
    Thinness(ThinnessSpec),
    MorseGauge(MorseGaugeSpec),
    PhiProfile(PhiProfileSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThinnessSpec {
    pub seed: u64,
    /// Sampled triples; all triples when absent.
    #[serde(default)]
    pub triples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorseGaugeSpec {
    pub seed: u64,
    pub c: f64,
    pub n_values: Vec<usize>,
    #[serde(default = "default_max_pairs")]
    pub max_pairs: usize,
}

fn default_max_pairs() -> usize {
    GaugeOptions::default().max_pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiProfileSpec {
    pub seed: u64,
    pub r_values: Vec<u32>,
    #[serde(default = "default_separation")]
    pub separation: u32,
    #[serde(default = "default_sides")]
    pub sides: String,
}

fn default_separation() -> u32 {
    PhiOptions::default().separation
}

fn default_sides() -> String {
    "same".into()
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::Midpoint(_) => "midpoint",
            ExperimentSpec::Stabilization(_) => "stabilization",
            ExperimentSpec::Variance(_) => "variance",
            ExperimentSpec::ShortPath(_) => "short_path",
            ExperimentSpec::BubbleAvoidance(_) => "bubble_avoidance",
            ExperimentSpec::Thinness(_) => "thinness",
            ExperimentSpec::MorseGauge(_) => "morse_gauge",
            ExperimentSpec::PhiProfile(_) => "phi_profile",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentSpec::Midpoint(s) => s.seed,
            ExperimentSpec::Stabilization(s) => s.seed,
            ExperimentSpec::Variance(s) => s.seed,
            ExperimentSpec::ShortPath(s) => s.seed,
            ExperimentSpec::BubbleAvoidance(s) => s.seed,
            ExperimentSpec::Thinness(s) => s.seed,
            ExperimentSpec::MorseGauge(s) => s.seed,
            ExperimentSpec::PhiProfile(s) => s.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentSpec::Midpoint(s) => s.seed = seed,
            ExperimentSpec::Stabilization(s) => s.seed = seed,
            ExperimentSpec::Variance(s) => s.seed = seed,
            ExperimentSpec::ShortPath(s) => s.seed = seed,
            ExperimentSpec::BubbleAvoidance(s) => s.seed = seed,
            ExperimentSpec::Thinness(s) => s.seed = seed,
            ExperimentSpec::MorseGauge(s) => s.seed = seed,
            ExperimentSpec::PhiProfile(s) => s.seed = seed,
        }
    }
}

/// Rendered outputs of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub summary: serde_json::Value,
    pub csv: String,
}

fn records_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("n,trial,crossed,touches_boundary,d_omega,hops,origin_distance\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{:?},{},{}",
            r.n, r.trial, r.crossed as u8, r.touches_boundary as u8, r.d_omega, r.hops, r.origin_distance
        );
    }
    out
}

fn to_json<T: Serialize>(v: &T) -> Result<serde_json::Value, ExperimentError> {
    serde_json::to_value(v).map_err(|e| ExperimentError::Runtime(e.to_string()))
}

fn need_random<'a>(weights: &WeightSource<'a>) -> Result<&'a EdgeDistribution, ExperimentError> {
    match *weights {
        WeightSource::Random(d) => Ok(d),
        WeightSource::Fixed(_) => Err(ExperimentError::Config(
            "this experiment needs a random edge-length distribution".into(),
        )),
    }
}

/// Runs one experiment, producing its summary record and CSV table.
pub fn execute(
    bundle: &GraphBundle,
    weights: WeightSource<'_>,
    spec: &ExperimentSpec,
) -> Result<ExperimentOutput, ExperimentError> {
    Ok(match spec {
        ExperimentSpec::Midpoint(s) => {
            let r = midpoint_probability(bundle, weights, s)?;
            ExperimentOutput {
                summary: to_json(&r)?,
                csv: records_csv(&r.records),
            }
        }
        ExperimentSpec::Stabilization(s) => {
            let r = geodesic_stabilization(bundle, weights, s)?;
            let mut csv = String::from("trial,n,hops,touches_boundary,core_size,stabilized\n");
            for t in &r.per_trial {
                for (k, &n) in r.n_values.iter().enumerate() {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{}",
                        t.trial,
                        n,
                        t.geodesics[k].hop_length(),
                        t.touches_boundary[k] as u8,
                        t.cores[k].len(),
                        t.stabilized as u8
                    );
                }
            }
            ExperimentOutput {
                summary: to_json(&r)?,
                csv,
            }
        }
        ExperimentSpec::Variance(s) => {
            let r = variance_profile(bundle, weights, s)?;
            ExperimentOutput {
                summary: to_json(&r)?,
                csv: records_csv(&r.records),
            }
        }
        ExperimentSpec::ShortPath(s) => {
            let r = empirical_short_path_probability(bundle, need_random(&weights)?, s)?;
            let mut csv = String::from("trial,omega_length,hit\n");
            let threshold = r.epsilon * r.path_length as f64;
            for (t, l) in r.lengths.iter().enumerate() {
                let _ = writeln!(csv, "{t},{l:?},{}", (*l <= threshold) as u8);
            }
            ExperimentOutput {
                summary: to_json(&r)?,
                csv,
            }
        }
        ExperimentSpec::BubbleAvoidance(s) => {
            let WeightSource::Fixed(w) = weights else {
                return Err(ExperimentError::Config("bubble avoidance uses the lattice's own weights".into()));
            };
            let bspec = bubble_spec_of(bundle)?;
            let pairs = bubble_pairs(bundle, &bspec, s.pairs, s.seed);
            let r = bubble_avoidance_check(bundle, w, &pairs, s.contour)?;
            let mut csv = String::from("u,v,distance,restricted,agree,selected_avoids\n");
            for v in &r.verdicts {
                let _ = writeln!(
                    csv,
                    "{},{},{:?},{:?},{},{}",
                    v.u, v.v, v.distance, v.restricted, v.agree as u8, v.selected_avoids as u8
                );
            }
            ExperimentOutput {
                summary: to_json(&r)?,
                csv,
            }
        }
        ExperimentSpec::Thinness(s) => {
            let sel = s.triples.map_or(TripleSelection::All, TripleSelection::Sample);
            let r = sample_thinness(&bundle.graph, sel, s.seed)?;
            let mut csv = String::from("triangle,a,b,c,thinness\n");
            for (k, v) in r.values.iter().enumerate() {
                match r.corners.get(k) {
                    Some([a, b, c]) => {
                        let _ = writeln!(csv, "{k},{a},{b},{c},{v}");
                    }
                    None => {
                        let _ = writeln!(csv, "{k},,,,{v}");
                    }
                }
            }
            let summary = serde_json::json!({
                "triangles": r.triangles,
                "delta": r.delta,
                "exact": r.exact,
                "seed": r.seed,
            });
            ExperimentOutput { summary, csv }
        }
        ExperimentSpec::MorseGauge(s) => {
            let opts = GaugeOptions {
                max_pairs: s.max_pairs,
                ..GaugeOptions::default()
            };
            let r = dms_gauge(bundle, s.c, &s.n_values, s.seed, opts)?;
            let mut csv = String::from("n,i,j,smallest_d\n");
            for sc in &r.scales {
                for p in &sc.pairs {
                    let _ = writeln!(csv, "{},{},{},{}", sc.n, p.i, p.j, p.smallest_d);
                }
            }
            ExperimentOutput {
                summary: to_json(&r)?,
                csv,
            }
        }
        ExperimentSpec::PhiProfile(s) => {
            let sides = match s.sides.as_str() {
                "same" => SideFilter::Same,
                "opposite" => SideFilter::Opposite,
                "any" => SideFilter::Any,
                other => return Err(ExperimentError::Config(format!("unknown sides filter {other:?}"))),
            };
            let opts = PhiOptions {
                separation: s.separation,
                sides,
                ..PhiOptions::default()
            };
            let r = phi_profile(bundle, &s.r_values, s.seed, opts)?;
            let mut csv = String::from("r,phi,configurations,path_hops,base\n");
            for p in &r.points {
                let (hops, base) = p
                    .witness
                    .as_ref()
                    .map_or((String::new(), String::new()), |w| (w.path.hop_length().to_string(), w.base.to_string()));
                let _ = writeln!(csv, "{},{:?},{},{},{}", p.r, p.phi, p.configurations, hops, base);
            }
            ExperimentOutput {
                summary: to_json(&r)?,
                csv,
            }
        }
    })
}
