//! Negative-curvature instruments, all in the hop metric.
//!
//! Each report carries enough (indices, seeds, witness paths) to be re-checked
//! independently of the search that produced it.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fpp::CounterRng;
use crate::generators::GraphBundle;
use crate::graph::{Graph, GraphError, Path, VertexId, VertexSet, UNREACHED};
use crate::metric::{hop_tree, restricted_bfs, SearchLimits};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoarseError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("geodesic too short: {0}")]
    Degenerate(String),
    #[error("no admissible configuration at R = {0}")]
    NoConfiguration(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiGeodesicParams {
    pub c: f64,
    pub k: f64,
}

impl QuasiGeodesicParams {
    pub fn new(c: f64, k: f64) -> Result<Self, CoarseError> {
        if !(c >= 1.0 && k >= 0.0 && c.is_finite() && k.is_finite()) {
            return Err(CoarseError::InvalidParams(format!(
                "quasi-geodesic needs C >= 1 and K >= 0, got C={c} K={k}"
            )));
        }
        Ok(QuasiGeodesicParams { c, k })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuasiGeodesicVerdict {
    pub holds: bool,
    /// First `(i, j)` in lexicographic order with `j - i > C d + K`.
    pub violation: Option<(usize, usize)>,
}

/// Checks `j - i <= C d(γ(i), γ(j)) + K` for every index pair.
pub fn is_quasi_geodesic(g: &Graph, path: &Path, params: QuasiGeodesicParams) -> QuasiGeodesicVerdict {
    let verts = path.vertices();
    for i in 0..verts.len() {
        let d = g.bfs_distances(verts[i]);
        for (j, &v) in verts.iter().enumerate().skip(i + 1) {
            if (j - i) as f64 > params.c * d[v as usize] as f64 + params.k {
                return QuasiGeodesicVerdict {
                    holds: false,
                    violation: Some((i, j)),
                };
            }
        }
    }
    QuasiGeodesicVerdict {
        holds: true,
        violation: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TripleSelection {
    All,
    Sample(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThinTriangleReport {
    pub triangles: usize,
    pub values: Vec<u32>,
    /// Triangle corners, parallel to `values` in sampled mode. Exact mode
    /// leaves this empty: values follow lexicographic `a < b < c` order.
    pub corners: Vec<[VertexId; 3]>,
    pub delta: u32,
    pub exact: bool,
    pub seed: u64,
}

/// Largest vertex count accepted for exhaustive thinness.
pub const EXACT_THINNESS_MAX_VERTICES: usize = 600;

/// Thinness of the triangle with sides `sides[0..3]`, given each side's
/// distance field.
fn triangle_thinness<D: Copy + Into<u32>>(sides: [&Path; 3], dist: [&[D]; 3]) -> u32 {
    let mut worst = 0;
    for s in 0..3 {
        let (a, b) = ((s + 1) % 3, (s + 2) % 3);
        for &v in sides[s].vertices() {
            let v = v as usize;
            worst = worst.max(dist[a][v].into().min(dist[b][v].into()));
        }
    }
    worst
}

/// Geodesic triangles on vertex triples; sides are the selected hop-geodesics
/// from the smaller to the larger id.
pub fn sample_thinness(g: &Graph, selection: TripleSelection, seed: u64) -> Result<ThinTriangleReport, CoarseError> {
    let n = g.vertex_count();
    if n < 3 {
        return Err(CoarseError::InvalidParams("thinness needs at least 3 vertices".into()));
    }
    match selection {
        TripleSelection::All => exact_thinness(g, seed),
        TripleSelection::Sample(count) => {
            let mut rng = CounterRng::new(seed, 0x7417);
            let corners: Vec<[VertexId; 3]> = (0..count)
                .map(|_| loop {
                    let mut c = [0; 3].map(|_| rng.below(n as u64) as VertexId);
                    c.sort_unstable();
                    if c[0] != c[1] && c[1] != c[2] {
                        break c;
                    }
                })
                .collect();
            let values: Vec<u32> = corners
                .par_iter()
                .map(|&[a, b, c]| {
                    let ta = hop_tree(g, a);
                    let tb = hop_tree(g, b);
                    let ab = ta.path_to(b).unwrap();
                    let ac = ta.path_to(c).unwrap();
                    let bc = tb.path_to(c).unwrap();
                    let near = |p: &Path| g.distance_to_path(p);
                    let (dab, dbc, dac) = (near(&ab), near(&bc), near(&ac));
                    triangle_thinness([&ab, &bc, &ac], [&dab, &dbc, &dac])
                })
                .collect();
            let delta = values.iter().copied().max().unwrap_or(0);
            Ok(ThinTriangleReport {
                triangles: values.len(),
                values,
                corners,
                delta,
                exact: false,
                seed,
            })
        }
    }
}

fn exact_thinness(g: &Graph, seed: u64) -> Result<ThinTriangleReport, CoarseError> {
    let n = g.vertex_count();
    if n > EXACT_THINNESS_MAX_VERTICES {
        return Err(CoarseError::InvalidParams(format!(
            "exact thinness limited to {EXACT_THINNESS_MAX_VERTICES} vertices, graph has {n}"
        )));
    }
    let pair = |a: usize, b: usize| a * n + b;
    // side geodesics for a < b and, per side, the distance field to it
    let mut sides: Vec<Option<Path>> = vec![None; n * n];
    for a in 0..n {
        let t = hop_tree(g, a as VertexId);
        for b in a + 1..n {
            sides[pair(a, b)] = t.path_to(b as VertexId);
        }
    }
    let side_dist: Vec<Vec<u16>> = (0..n * n)
        .into_par_iter()
        .map(|k| match &sides[k] {
            Some(p) => g
                .distance_to_path(p)
                .into_iter()
                .map(|d| d.min(u16::MAX as u32) as u16)
                .collect(),
            None => Vec::new(),
        })
        .collect();
    let per_a: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut vals = Vec::new();
            for b in a + 1..n {
                for c in b + 1..n {
                    let (ab, bc, ac) = (pair(a, b), pair(b, c), pair(a, c));
                    vals.push(triangle_thinness(
                        [
                            sides[ab].as_ref().unwrap(),
                            sides[bc].as_ref().unwrap(),
                            sides[ac].as_ref().unwrap(),
                        ],
                        [&side_dist[ab][..], &side_dist[bc][..], &side_dist[ac][..]],
                    ));
                }
            }
            vals
        })
        .collect();
    let values: Vec<u32> = per_a.into_iter().flatten().collect();
    let delta = values.iter().copied().max().unwrap_or(0);
    Ok(ThinTriangleReport {
        triangles: values.len(),
        values,
        corners: Vec::new(),
        delta,
        exact: true,
        seed,
    })
}

/// Middle third of `γ[i..=j]` as an inclusive index range.
pub fn middle_third(i: usize, j: usize) -> (usize, usize) {
    let m = j - i;
    (i + m.div_ceil(3), i + 2 * m / 3)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugePair {
    pub i: usize,
    pub j: usize,
    pub smallest_d: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeScale {
    pub n: usize,
    pub pairs: Vec<GaugePair>,
    /// Max of the per-pair smallest feasible `D`.
    pub d: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseGaugeReport {
    pub c: f64,
    pub scales: Vec<GaugeScale>,
    pub d_hat: u32,
    pub feasible: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeOptions {
    /// Pairs per scale; all admissible pairs when fewer exist.
    pub max_pairs: usize,
    /// Largest `D` tried.
    pub max_d: u32,
}

impl Default for GaugeOptions {
    fn default() -> Self {
        GaugeOptions {
            max_pairs: 64,
            max_d: 64,
        }
    }
}

/// Whether every `γ_0[i]`–`γ_0[j]` path of hop length `<= C (j - i)` meets the
/// `D`-neighborhood of the middle third; `mid_dist` is the hop distance to
/// that middle third.
fn gauge_feasible(g: &Graph, geodesic: &Path, i: usize, j: usize, mid_dist: &[u32], c: f64, d: u32) -> bool {
    let (x, y) = (geodesic.at(i), geodesic.at(j));
    if mid_dist[x as usize] <= d || mid_dist[y as usize] <= d {
        return true;
    }
    let forbidden = VertexSet::from_predicate(g.vertex_count(), |v| mid_dist[v as usize] <= d);
    let tree = restricted_bfs(
        g,
        x,
        SearchLimits {
            forbidden: Some(&forbidden),
            target: Some(y),
        },
    );
    let len = tree.distance(y);
    !len.is_finite() || len > c * (j - i) as f64
}

fn middle_distances(g: &Graph, geodesic: &Path, i: usize, j: usize) -> Vec<u32> {
    let (lo, hi) = middle_third(i, j);
    g.multi_source_bfs(geodesic.vertices()[lo..=hi].iter().copied(), None)
}

/// Re-runs the avoidance check at one `D` for one pair.
pub fn gauge_check(g: &Graph, geodesic: &Path, i: usize, j: usize, c: f64, d: u32) -> bool {
    gauge_feasible(g, geodesic, i, j, &middle_distances(g, geodesic, i, j), c, d)
}

/// Smallest `D >= 1` for which the middle-third criterion holds at constant
/// `c`, per pair separation `n`, over pairs of `γ_0` inside the safe ball.
///
/// Feasibility is monotone in `D`, so each pair is a binary search.
pub fn dms_gauge(
    bundle: &GraphBundle,
    c: f64,
    n_values: &[usize],
    seed: u64,
    options: GaugeOptions,
) -> Result<MorseGaugeReport, CoarseError> {
    if !(c >= 1.0 && c.is_finite()) {
        return Err(CoarseError::InvalidParams(format!("gauge constant C must be >= 1, got {c}")));
    }
    let g = &bundle.graph;
    let geo = &bundle.geodesic;
    let reach = bundle.geodesic_reach().min(bundle.safe_radius as usize);
    let (lo, hi) = (bundle.origin_index - reach, bundle.origin_index + reach);
    let mut scales = Vec::new();
    for (scale_idx, &n) in n_values.iter().enumerate() {
        if n == 0 || n > hi - lo {
            return Err(CoarseError::Degenerate(format!(
                "separation {n} does not fit in the {} usable steps of the geodesic",
                hi - lo
            )));
        }
        let mut starts: Vec<usize> = (lo..=hi - n).collect();
        if starts.len() > options.max_pairs {
            let mut rng = CounterRng::new(seed, scale_idx as u64);
            for k in 0..options.max_pairs {
                let pick = k + rng.below((starts.len() - k) as u64) as usize;
                starts.swap(k, pick);
            }
            starts.truncate(options.max_pairs);
            starts.sort_unstable();
        }
        let pairs: Vec<GaugePair> = starts
            .par_iter()
            .map(|&i| {
                let j = i + n;
                let mid = middle_distances(g, geo, i, j);
                let (mut a, mut b) = (1u32, options.max_d);
                if !gauge_feasible(g, geo, i, j, &mid, c, b) {
                    return GaugePair { i, j, smallest_d: UNREACHED };
                }
                while a < b {
                    let m = a + (b - a) / 2;
                    if gauge_feasible(g, geo, i, j, &mid, c, m) {
                        b = m;
                    } else {
                        a = m + 1;
                    }
                }
                GaugePair { i, j, smallest_d: a }
            })
            .collect();
        let d = pairs.iter().map(|p| p.smallest_d).max().unwrap_or(1);
        scales.push(GaugeScale { n, pairs, d });
    }
    let feasible = scales.iter().all(|s| s.d != UNREACHED);
    let d_hat = scales.iter().map(|s| s.d).max().unwrap_or(1);
    Ok(MorseGaugeReport {
        c,
        scales,
        d_hat,
        feasible,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SideFilter {
    Same,
    Opposite,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiOptions {
    /// Required `d(x', y') >= separation * R`.
    pub separation: u32,
    pub sides: SideFilter,
    /// Cap on source witnesses per radius, sampled with the seed.
    pub max_witnesses: usize,
}

impl Default for PhiOptions {
    fn default() -> Self {
        PhiOptions {
            separation: 10,
            sides: SideFilter::Same,
            max_witnesses: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiWitness {
    pub x: VertexId,
    pub y: VertexId,
    pub x_prime: VertexId,
    pub y_prime: VertexId,
    pub base: u32,
    pub path: Path,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiPoint {
    pub r: u32,
    /// `+∞` when no admissible configuration has an avoiding path.
    pub phi: f64,
    pub configurations: usize,
    pub witness: Option<PhiWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiProfile {
    pub points: Vec<PhiPoint>,
    pub separation: u32,
    pub seed: u64,
}

/// Minimum of `|γ| / d(x, y)` over avoiding paths `γ` from `x'` to `y'`.
///
/// `x'`, `y'` range over vertices at hop distance exactly `R` from `γ_0`;
/// `x`, `y` are their nearest `γ_0` vertices, picked to maximize `d(x, y)`.
/// Avoiding paths keep every vertex at distance `>= R` from `γ_0`.
pub fn phi_profile(
    bundle: &GraphBundle,
    r_values: &[u32],
    seed: u64,
    options: PhiOptions,
) -> Result<PhiProfile, CoarseError> {
    let g = &bundle.graph;
    let geo = &bundle.geodesic;
    let to_geo = g.distance_to_path(geo);
    let mut points = Vec::new();
    for (ri, &r) in r_values.iter().enumerate() {
        if r == 0 {
            return Err(CoarseError::InvalidParams("R must be >= 1".into()));
        }
        let mut witnesses: Vec<VertexId> = (0..g.vertex_count() as VertexId)
            .filter(|&v| to_geo[v as usize] == r)
            .collect();
        if witnesses.len() > options.max_witnesses {
            let mut rng = CounterRng::new(seed, 0x9e11 + ri as u64);
            for k in 0..options.max_witnesses {
                let pick = k + rng.below((witnesses.len() - k) as u64) as usize;
                witnesses.swap(k, pick);
            }
            witnesses.truncate(options.max_witnesses);
            witnesses.sort_unstable();
        }
        // projection interval of each witness on γ_0
        let project = |w: VertexId| -> (usize, usize) {
            let d = g.multi_source_bfs(std::iter::once(w), Some(r));
            let hits = geo.vertices().iter().enumerate().filter(|&(_, &v)| d[v as usize] == r);
            let (mut lo, mut hi) = (usize::MAX, 0);
            for (k, _) in hits {
                lo = lo.min(k);
                hi = hi.max(k);
            }
            (lo, hi)
        };
        let forbidden = VertexSet::from_predicate(g.vertex_count(), |v| to_geo[v as usize] < r);
        let sides_ok = |a: VertexId, b: VertexId| match options.sides {
            SideFilter::Any => true,
            SideFilter::Same => bundle.side(a) == bundle.side(b),
            SideFilter::Opposite => bundle.side(a) == -bundle.side(b),
        };
        let proj: Vec<(usize, usize)> = witnesses.iter().map(|&w| project(w)).collect();
        let all_at_r: Vec<VertexId> = (0..g.vertex_count() as VertexId)
            .filter(|&v| to_geo[v as usize] == r)
            .collect();
        let all_proj: Vec<(usize, usize)> = all_at_r.iter().map(|&w| project(w)).collect();
        let per_source: Vec<(usize, Option<(f64, PhiWitness)>)> = witnesses
            .par_iter()
            .zip(proj.par_iter())
            .map(|(&xp, &(xlo, xhi))| {
                let hop = g.bfs_distances(xp);
                let avoid = restricted_bfs(
                    g,
                    xp,
                    SearchLimits {
                        forbidden: Some(&forbidden),
                        target: None,
                    },
                );
                let mut configs = 0;
                let mut best: Option<(f64, PhiWitness)> = None;
                for (&yp, &(ylo, yhi)) in all_at_r.iter().zip(&all_proj) {
                    if yp == xp || !sides_ok(xp, yp) || hop[yp as usize] < options.separation * r {
                        continue;
                    }
                    let (x_idx, y_idx) = if xlo.abs_diff(yhi) >= xhi.abs_diff(ylo) {
                        (xlo, yhi)
                    } else {
                        (xhi, ylo)
                    };
                    let base = x_idx.abs_diff(y_idx) as u32;
                    if base == 0 {
                        continue;
                    }
                    configs += 1;
                    let len = avoid.distance(yp);
                    if !len.is_finite() {
                        continue;
                    }
                    let ratio = len / base as f64;
                    if best.as_ref().is_none_or(|(b, _)| ratio < *b) {
                        best = Some((
                            ratio,
                            PhiWitness {
                                x: geo.at(x_idx),
                                y: geo.at(y_idx),
                                x_prime: xp,
                                y_prime: yp,
                                base,
                                path: avoid.path_to(yp).unwrap(),
                            },
                        ));
                    }
                }
                (configs, best)
            })
            .collect();
        let configurations: usize = per_source.iter().map(|(c, _)| c).sum();
        if configurations == 0 {
            return Err(CoarseError::NoConfiguration(r));
        }
        // first minimum in witness order
        let mut best: Option<(f64, PhiWitness)> = None;
        for (_, cand) in per_source {
            if let Some((ratio, w)) = cand {
                if best.as_ref().is_none_or(|(b, _)| ratio < *b) {
                    best = Some((ratio, w));
                }
            }
        }
        points.push(match best {
            Some((phi, w)) => PhiPoint {
                r,
                phi,
                configurations,
                witness: Some(w),
            },
            None => PhiPoint {
                r,
                phi: f64::INFINITY,
                configurations,
                witness: None,
            },
        });
    }
    Ok(PhiProfile {
        points,
        separation: options.separation,
        seed,
    })
}

/// Re-verifies a φ witness: the path joins `x'` to `y'`, stays at distance
/// `>= R` from `γ_0`, and reproduces the ratio.
pub fn verify_phi_point(bundle: &GraphBundle, point: &PhiPoint) -> Result<(), String> {
    let Some(w) = &point.witness else {
        return if point.phi.is_infinite() {
            Ok(())
        } else {
            Err("finite ratio without a witness".into())
        };
    };
    let g = &bundle.graph;
    let to_geo = g.distance_to_path(&bundle.geodesic);
    g.path(w.path.vertices().to_vec()).map_err(|e| e.to_string())?;
    if w.path.start() != w.x_prime || w.path.end() != w.y_prime {
        return Err("witness path has wrong endpoints".into());
    }
    if w.path.vertices().iter().any(|&v| to_geo[v as usize] < point.r) {
        return Err("witness path enters the R-neighborhood".into());
    }
    let hd = |a, b| g.hop_distance(a, b).unwrap();
    if hd(w.x, w.x_prime) != point.r || hd(w.y, w.y_prime) != point.r || hd(w.x, w.y) != w.base {
        return Err("witness distances do not match".into());
    }
    if (w.path.hop_length() as f64 / w.base as f64 - point.phi).abs() > 1e-12 {
        return Err("witness ratio does not match".into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcursionRecord {
    pub r_radius: u32,
    /// First index within `multiple * R` of the far half.
    pub r_index: usize,
    pub p: usize,
    pub q: usize,
    pub x_prime: VertexId,
    pub y_prime: VertexId,
    /// Nearest `γ_0` indices of `x'` and `y'`.
    pub i: usize,
    pub j: usize,
    pub gap: u32,
    /// Whether the geodesic avoids `B(o, multiple * R)`.
    pub avoids_ball: bool,
}

/// Distance fields shared by many decompositions against one `γ_0`.
pub struct ExcursionContext<'a> {
    graph: &'a Graph,
    geodesic: &'a Path,
    to_geodesic: Vec<u32>,
    to_far_half: Vec<u32>,
    from_origin: Vec<u32>,
}

impl<'a> ExcursionContext<'a> {
    /// The far half is `γ_0` from the origin index onward.
    pub fn new(graph: &'a Graph, geodesic: &'a Path, origin_index: usize) -> Result<Self, CoarseError> {
        if origin_index > geodesic.hop_length() {
            return Err(CoarseError::InvalidParams("origin index outside the geodesic".into()));
        }
        let origin = geodesic.at(origin_index);
        Ok(ExcursionContext {
            graph,
            geodesic,
            to_geodesic: graph.distance_to_path(geodesic),
            to_far_half: graph.multi_source_bfs(geodesic.vertices()[origin_index..].iter().copied(), None),
            from_origin: graph.bfs_distances(origin),
        })
    }

    pub fn distance_to_geodesic(&self, v: VertexId) -> u32 {
        self.to_geodesic[v as usize]
    }

    fn nearest_index(&self, v: VertexId, r: u32) -> usize {
        let d = self.graph.multi_source_bfs(std::iter::once(v), Some(r));
        self.geodesic
            .vertices()
            .iter()
            .position(|&w| d[w as usize] <= r)
            .unwrap_or(usize::MAX)
    }

    /// Splits `geo` at its first approach to the far half: `p <= r <= q` are
    /// the nearest indices around `r` at distance exactly `R` from `γ_0`.
    ///
    /// `None` when `geo` is inside the `R`-neighborhood of `γ_0` at `r`.
    pub fn decompose(&self, geo: &Path, radius: u32, multiple: u32) -> Result<Option<ExcursionRecord>, CoarseError> {
        if radius == 0 || multiple == 0 {
            return Err(CoarseError::InvalidParams("excursion needs R >= 1 and multiple >= 1".into()));
        }
        let vs = geo.vertices();
        for w in vs.windows(2) {
            if self.graph.edge_id(w[0], w[1]).is_none() {
                return Err(CoarseError::Graph(GraphError::NotAdjacent { from: w[0], to: w[1] }));
            }
        }
        let threshold = multiple * radius;
        let Some(r_index) = vs.iter().position(|&v| self.to_far_half[v as usize] <= threshold) else {
            return Ok(None);
        };
        let dg = |k: usize| self.to_geodesic[vs[k] as usize];
        if dg(r_index) < radius {
            return Ok(None);
        }
        let p = (0..=r_index).rev().find(|&k| dg(k) == radius);
        let q = (r_index..vs.len()).find(|&k| dg(k) == radius);
        let (Some(p), Some(q)) = (p, q) else {
            return Ok(None);
        };
        let (xp, yp) = (vs[p], vs[q]);
        let gap = self.graph.hop_distance(xp, yp)?;
        let avoids_ball = vs.iter().all(|&v| self.from_origin[v as usize] > threshold);
        Ok(Some(ExcursionRecord {
            r_radius: radius,
            r_index,
            p,
            q,
            x_prime: xp,
            y_prime: yp,
            i: self.nearest_index(xp, radius),
            j: self.nearest_index(yp, radius),
            gap,
            avoids_ball,
        }))
    }

    /// Checks the record's defining distance conditions against `geo`.
    pub fn verify(&self, geo: &Path, rec: &ExcursionRecord) -> Result<(), String> {
        let dg = |k: usize| self.to_geodesic[geo.at(k) as usize];
        if dg(rec.p) != rec.r_radius || dg(rec.q) != rec.r_radius {
            return Err("endpoints not at distance R".into());
        }
        if (rec.p..=rec.q).any(|k| dg(k) < rec.r_radius) {
            return Err("excursion dips inside the R-neighborhood".into());
        }
        if !(rec.p <= rec.r_index && rec.r_index <= rec.q) {
            return Err("p, q do not bracket r".into());
        }
        let hd = |a, b| self.graph.hop_distance(a, b).unwrap();
        if hd(self.geodesic.at(rec.i), rec.x_prime) != rec.r_radius
            || hd(self.geodesic.at(rec.j), rec.y_prime) != rec.r_radius
        {
            return Err("nearest geodesic vertices are not at distance R".into());
        }
        Ok(())
    }
}

/// One-shot [`ExcursionContext::decompose`].
pub fn excursion_decomposition(
    g: &Graph,
    geo: &Path,
    geodesic: &Path,
    origin_index: usize,
    radius: u32,
    multiple: u32,
) -> Result<Option<ExcursionRecord>, CoarseError> {
    ExcursionContext::new(g, geodesic, origin_index)?.decompose(geo, radius, multiple)
}
