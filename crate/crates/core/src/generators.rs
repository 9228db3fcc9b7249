//! The example spaces, each delivered with an origin `o` and a marked
//! hop-geodesic `γ_0` through it.
//!
//! Truncations are finite, so `γ_0` runs between two boundary vertices and
//! stands in for a bi-infinite geodesic. `safe_radius` is the hop distance
//! from `o` to the nearest boundary vertex: balls of smaller radius never see
//! the truncation.

use std::io::{BufRead, Read};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fpp::WeightAssignment;
use crate::graph::{Graph, GraphError, Path, VertexId, VertexSet, UNREACHED};

/// Default ceiling on generated edges.
pub const DEFAULT_MAX_EDGES: usize = 40_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("size budget exceeded: {0}")]
    Budget(String),
    #[error("non-hyperbolic {{{p},{q}}}: need 1/p + 1/q < 1/2")]
    NonHyperbolic { p: u32, q: u32 },
    #[error("invalid generator parameters: {0}")]
    InvalidSpec(String),
    #[error("io: {0}")]
    Io(String),
}

/// Generator parameters as they appear in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Lattice {
        dim: u32,
        half_width: u32,
    },
    Tree {
        degree: u32,
        depth: u32,
    },
    Tiling {
        p: u32,
        q: u32,
        layers: u32,
    },
    Bubble {
        half_width: u32,
        #[serde(default)]
        sizes: Option<Vec<u32>>,
        #[serde(default = "default_cheap")]
        cheap: f64,
        #[serde(default = "default_expensive")]
        default: f64,
    },
    EdgeList {
        path: std::path::PathBuf,
    },
}

fn default_cheap() -> f64 {
    0.1
}

fn default_expensive() -> f64 {
    1.0
}

/// A generated graph plus the geometric annotations the instruments need.
#[derive(Debug, Clone)]
pub struct GraphBundle {
    pub graph: Graph,
    pub origin: VertexId,
    /// Marked hop-geodesic `γ_0`, with `geodesic.at(origin_index) == origin`.
    pub geodesic: Path,
    pub origin_index: usize,
    /// Truncation frontier.
    pub boundary: VertexSet,
    pub safe_radius: u32,
    /// `-1` / `+1` for the two sides of `γ_0`, `0` on `γ_0` or unlabeled.
    pub sides: Vec<i8>,
    pub spec: GeneratorSpec,
    lattice: Option<LatticeShape>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LatticeShape {
    dim: u32,
    half_width: u32,
}

impl LatticeShape {
    fn side(&self) -> u64 {
        2 * self.half_width as u64 + 1
    }

    fn coords(&self, v: VertexId) -> Vec<i64> {
        let side = self.side();
        let mut rest = v as u64;
        (0..self.dim)
            .map(|_| {
                let c = (rest % side) as i64 - self.half_width as i64;
                rest /= side;
                c
            })
            .collect()
    }

    fn vertex(&self, coords: &[i64]) -> Option<VertexId> {
        let l = self.half_width as i64;
        let mut id = 0u64;
        for &c in coords.iter().rev() {
            if c.abs() > l {
                return None;
            }
            id = id * self.side() + (c + l) as u64;
        }
        Some(id as VertexId)
    }
}

impl GraphBundle {
    /// Number of usable steps from `o` along each direction of `γ_0`.
    pub fn geodesic_reach(&self) -> usize {
        self.origin_index
            .min(self.geodesic.hop_length() - self.origin_index)
    }

    /// `(γ_0(-n), γ_0(n))` relative to the origin.
    pub fn symmetric_pair(&self, n: usize) -> Option<(VertexId, VertexId)> {
        (n <= self.geodesic_reach()).then(|| {
            (
                self.geodesic.at(self.origin_index - n),
                self.geodesic.at(self.origin_index + n),
            )
        })
    }

    /// Integer coordinates for lattice bundles.
    pub fn lattice_coords(&self, v: VertexId) -> Option<Vec<i64>> {
        self.lattice.map(|s| s.coords(v))
    }

    pub fn lattice_vertex(&self, coords: &[i64]) -> Option<VertexId> {
        self.lattice.and_then(|s| {
            (coords.len() == s.dim as usize)
                .then(|| s.vertex(coords))
                .flatten()
        })
    }

    pub fn side(&self, v: VertexId) -> i8 {
        self.sides[v as usize]
    }

    /// One-line-per-fact human summary.
    pub fn describe(&self) -> String {
        let plus = self.sides.iter().filter(|&&s| s > 0).count();
        let minus = self.sides.iter().filter(|&&s| s < 0).count();
        let unlabeled = self.graph.vertex_count() - plus - minus;
        format!(
            "vertices: {}\nedges: {}\nmax_degree: {}\nsafe_radius: {}\ngeodesic_length: {}\norigin: {} (index {})\nboundary_vertices: {}\nsides: +1={} -1={} unlabeled={}\n",
            self.graph.vertex_count(),
            self.graph.edge_count(),
            self.graph.max_degree(),
            self.safe_radius,
            self.geodesic.hop_length(),
            self.origin,
            self.origin_index,
            self.boundary.len(),
            plus,
            minus,
            unlabeled
        )
    }

    /// Edge-list dump with `# origin` and `# geodesic` headers.
    pub fn write_edge_list(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "# origin {}", self.origin)?;
        let ids: Vec<String> = self.geodesic.vertices().iter().map(|v| v.to_string()).collect();
        writeln!(out, "# geodesic {}", ids.join(" "))?;
        self.graph.write_edge_list(out)
    }

    /// Exhaustive `γ_0` check: geodesic, passes through `o`, ends on the boundary.
    pub fn verify(&self) -> Result<(), String> {
        if self.geodesic.at(self.origin_index) != self.origin {
            return Err("origin is not on the marked geodesic".into());
        }
        if !self.graph.is_hop_geodesic(&self.geodesic) {
            return Err("marked path is not a hop-geodesic".into());
        }
        for end in [self.geodesic.start(), self.geodesic.end()] {
            if !self.boundary.contains(end) {
                return Err(format!("geodesic endpoint {end} is not on the boundary"));
            }
        }
        let d = self.graph.bfs_distances(self.origin);
        let nearest = self.boundary.iter().map(|b| d[b as usize]).min().unwrap_or(UNREACHED);
        if nearest != self.safe_radius {
            return Err(format!("safe_radius {} but boundary at {nearest}", self.safe_radius));
        }
        Ok(())
    }
}

fn safe_radius(g: &Graph, origin: VertexId, boundary: &VertexSet) -> u32 {
    let d = g.bfs_distances(origin);
    boundary
        .iter()
        .map(|b| d[b as usize])
        .min()
        .unwrap_or(UNREACHED)
}

/// Labels the components of `G − γ_0` by which arc of the cyclically ordered
/// boundary they reach, the arcs being cut at the endpoints of `γ_0`.
fn label_sides_by_arcs(g: &Graph, geodesic: &Path, boundary_cycle: &[VertexId]) -> Vec<i8> {
    let n = g.vertex_count();
    let mut position = vec![usize::MAX; n];
    for (k, &b) in boundary_cycle.iter().enumerate() {
        position[b as usize] = k;
    }
    let a = position[geodesic.start() as usize];
    let b = position[geodesic.end() as usize];
    let len = boundary_cycle.len();
    let on_first_arc = |p: usize| {
        let off = (p + len - a) % len;
        off > 0 && off < (b + len - a) % len
    };
    let mut label = vec![0i8; n];
    let mut removed = vec![false; n];
    for &v in geodesic.vertices() {
        removed[v as usize] = true;
    }
    let mut seen = removed.clone();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start as VertexId];
        seen[start] = true;
        let mut k = 0;
        let mut side = 0i8;
        while k < comp.len() {
            let u = comp[k];
            k += 1;
            if side == 0 && position[u as usize] != usize::MAX {
                side = if on_first_arc(position[u as usize]) { 1 } else { -1 };
            }
            for &w in g.neighbors(u) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    comp.push(w);
                }
            }
        }
        for u in comp {
            label[u as usize] = side;
        }
    }
    label
}

/// Integer points of `[-L, L]^d` with nearest-neighbor edges.
pub fn gen_lattice_box(dim: u32, half_width: u32) -> Result<GraphBundle, GenError> {
    gen_lattice_box_with_budget(dim, half_width, DEFAULT_MAX_EDGES)
}

pub fn gen_lattice_box_with_budget(
    dim: u32,
    half_width: u32,
    max_edges: usize,
) -> Result<GraphBundle, GenError> {
    if dim == 0 {
        return Err(GenError::InvalidSpec("lattice dimension must be >= 1".into()));
    }
    if half_width == 0 {
        return Err(GenError::InvalidSpec("lattice half-width must be >= 1".into()));
    }
    let shape = LatticeShape { dim, half_width };
    let side = shape.side();
    let count = side
        .checked_pow(dim)
        .ok_or_else(|| GenError::Budget("lattice vertex count overflows".into()))?;
    let edge_estimate = dim as u64 * count;
    if edge_estimate > max_edges as u64 || count >= VertexId::MAX as u64 {
        return Err(GenError::Budget(format!(
            "lattice d={dim} L={half_width} needs ~{edge_estimate} edges, budget {max_edges}"
        )));
    }
    let mut edges = Vec::with_capacity(edge_estimate as usize);
    let mut stride = 1u64;
    for axis in 0..dim {
        for v in 0..count {
            let c = (v / stride) % side;
            if c + 1 < side {
                edges.push((v as VertexId, (v + stride) as VertexId));
            }
        }
        stride *= side;
        let _ = axis;
    }
    let graph = Graph::from_edges(count as usize, edges)?;
    let l = half_width as i64;
    let origin = shape.vertex(&vec![0; dim as usize]).unwrap();
    let axis: Vec<VertexId> = (-l..=l)
        .map(|x| {
            let mut c = vec![0i64; dim as usize];
            c[0] = x;
            shape.vertex(&c).unwrap()
        })
        .collect();
    let geodesic = Path::new_unchecked(axis);
    let boundary = VertexSet::from_predicate(count as usize, |v| {
        shape.coords(v).iter().any(|c| c.abs() == l)
    });
    let sides = (0..count as VertexId)
        .map(|v| {
            if dim < 2 {
                0
            } else {
                shape.coords(v)[1].signum() as i8
            }
        })
        .collect();
    let safe = safe_radius(&graph, origin, &boundary);
    Ok(GraphBundle {
        graph,
        origin,
        geodesic,
        origin_index: half_width as usize,
        boundary,
        safe_radius: safe,
        sides,
        spec: GeneratorSpec::Lattice { dim, half_width },
        lattice: Some(shape),
    })
}

/// Rooted tree: the root has `degree` children, every other internal vertex
/// `degree - 1`, truncated at `depth`.
pub fn gen_regular_tree(degree: u32, depth: u32) -> Result<GraphBundle, GenError> {
    gen_regular_tree_with_budget(degree, depth, DEFAULT_MAX_EDGES)
}

pub fn gen_regular_tree_with_budget(
    degree: u32,
    depth: u32,
    max_edges: usize,
) -> Result<GraphBundle, GenError> {
    if degree < 3 {
        return Err(GenError::InvalidSpec("tree degree must be >= 3".into()));
    }
    if depth == 0 {
        return Err(GenError::InvalidSpec("tree depth must be >= 1".into()));
    }
    // 1 + q((q-1)^depth - 1)/(q-2)
    let q = degree as u128;
    let count = (q - 1)
        .checked_pow(depth)
        .map(|p| 1 + q * (p - 1) / (q - 2))
        .filter(|&c| c <= max_edges as u128 + 1)
        .ok_or_else(|| GenError::Budget(format!("tree q={degree} depth={depth} too large")))?
        as usize;
    // BFS numbering: children of a vertex are contiguous and in planar order
    let mut edges = Vec::with_capacity(count - 1);
    let mut level_start = 0usize;
    let mut level_len = 1usize;
    let mut next = 1usize;
    let mut first_child = vec![0usize; count];
    for level in 0..depth {
        for k in 0..level_len {
            let v = level_start + k;
            first_child[v] = next;
            let kids = if level == 0 { degree } else { degree - 1 };
            for _ in 0..kids {
                edges.push((v as VertexId, next as VertexId));
                next += 1;
            }
        }
        level_start += level_len;
        level_len = next - level_start;
    }
    debug_assert_eq!(next, count);
    let graph = Graph::from_edges(count, edges)?;

    // two rays through root children 0 and 1, always descending via the first child
    let ray = |start: usize| {
        let mut v = start;
        let mut out = vec![v as VertexId];
        for _ in 1..depth {
            v = first_child[v];
            out.push(v as VertexId);
        }
        out
    };
    let mut verts: Vec<VertexId> = ray(1).into_iter().rev().collect();
    verts.push(0);
    verts.extend(ray(2));
    let geodesic = Path::new_unchecked(verts);

    let leaves_from = count - level_len;
    let boundary = VertexSet::from_predicate(count, |v| v as usize >= leaves_from);
    // with contiguous planar child blocks, BFS order of the last level is the
    // left-to-right (DFS) leaf order
    let cycle: Vec<VertexId> = (leaves_from as VertexId..count as VertexId).collect();
    let sides = label_sides_by_arcs(&graph, &geodesic, &cycle);
    Ok(GraphBundle {
        graph,
        origin: 0,
        geodesic,
        origin_index: depth as usize,
        boundary,
        safe_radius: depth,
        sides,
        spec: GeneratorSpec::Tree { degree, depth },
        lattice: None,
    })
}

/// Output of the combinatorial `{p,q}` layer construction.
#[derive(Debug, Clone)]
pub struct TilingBuild {
    pub vertex_count: usize,
    pub edges: Vec<(VertexId, VertexId)>,
    /// Face cycles, one per `p`-gon, when recorded.
    pub faces: Vec<Vec<VertexId>>,
    pub face_count: usize,
    /// Vertex count per layer (layer 0 is the central face).
    pub layer_sizes: Vec<usize>,
    /// Final boundary in cyclic order.
    pub boundary_cycle: Vec<VertexId>,
}

/// Builds the 1-skeleton of the `{p,q}` tessellation layer by layer.
///
/// The boundary of the patch is a cycle. For each boundary vertex `b` with
/// `f(b)` attached faces, the next layer adds the `q - f(b)` missing faces
/// around it: faces sharing a boundary edge, and faces touching the boundary
/// only at `b`. A boundary vertex needing a single face merges the edge faces
/// on both sides of it. Consecutive new faces share a spoke from an old vertex
/// to a new vertex, which is how new vertices are shared between faces.
///
/// `record_faces` keeps the face cycles (memory-heavy on large patches).
pub fn build_tiling(
    p: u32,
    q: u32,
    layers: u32,
    max_edges: usize,
    record_faces: bool,
) -> Result<TilingBuild, GenError> {
    if p < 3 || q < 3 {
        return Err(GenError::InvalidSpec("tiling needs p, q >= 3".into()));
    }
    // 1/p + 1/q < 1/2  <=>  2(p + q) < pq
    if 2 * (p + q) >= p * q {
        return Err(GenError::NonHyperbolic { p, q });
    }
    let p = p as usize;
    let q = q as usize;
    let mut faces: Vec<Vec<VertexId>> = vec![(0..p as VertexId).collect()];
    let mut total_faces = 1usize;
    let mut edges: Vec<(VertexId, VertexId)> = (0..p)
        .map(|i| (i as VertexId, ((i + 1) % p) as VertexId))
        .collect();
    let mut face_count: Vec<usize> = vec![1; p];
    let mut boundary: Vec<VertexId> = (0..p as VertexId).collect();
    let mut layer_sizes = vec![p];

    for _ in 0..layers {
        let m = boundary.len();
        let need: Vec<usize> = boundary
            .iter()
            .map(|&b| q - face_count[b as usize])
            .collect();
        if need.contains(&0) {
            return Err(GenError::InvalidSpec("closed vertex on the boundary".into()));
        }
        let start = need.iter().position(|&k| k >= 2).ok_or_else(|| {
            GenError::InvalidSpec("every boundary vertex needs one face; layer degenerates".into())
        })?;
        // old-vertex runs of the new faces, in cyclic order around the patch
        let mut new_faces: Vec<Vec<VertexId>> = Vec::new();
        for idx in 0..m {
            let i = (start + idx) % m;
            let b = boundary[i];
            let b_next = boundary[(i + 1) % m];
            if need[i] >= 2 || idx == 0 {
                for _ in 0..need[i].saturating_sub(2) {
                    new_faces.push(vec![b]);
                }
                new_faces.push(vec![b, b_next]);
            } else {
                new_faces.last_mut().unwrap().push(b_next);
            }
        }
        let big_m = new_faces.len();
        let fresh: Vec<usize> = new_faces
            .iter()
            .map(|run| p as isize - run.len() as isize)
            .map(|k| {
                if k < 1 {
                    Err(GenError::InvalidSpec(format!(
                        "face closes without new vertices ({{{p},{q}}} layering degenerates)"
                    )))
                } else {
                    Ok(k as usize)
                }
            })
            .collect::<Result<_, _>>()?;
        if fresh.iter().all(|&k| k == 1) {
            return Err(GenError::InvalidSpec("all new faces share one tip".into()));
        }
        // spoke t sits between faces t and t+1; faces with one fresh vertex force
        // their two spokes to share a tip
        let mut tip_class: Vec<usize> = (0..big_m).collect();
        fn find(c: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while c[r] != r {
                r = c[r];
            }
            let mut y = x;
            while c[y] != r {
                let nxt = c[y];
                c[y] = r;
                y = nxt;
            }
            r
        }
        for t in 0..big_m {
            if fresh[t] == 1 {
                let a = find(&mut tip_class, (t + big_m - 1) % big_m);
                let b = find(&mut tip_class, t);
                if a != b {
                    tip_class[a.max(b)] = a.min(b);
                }
            }
        }
        let mut next_id = face_count.len() as VertexId;
        let mut layer_faces: Vec<Vec<VertexId>> = Vec::with_capacity(big_m);
        let mut class_vertex: Vec<Option<VertexId>> = vec![None; big_m];
        let mut new_cycle: Vec<VertexId> = Vec::new();
        let mut tip = |t: usize, class_vertex: &mut Vec<Option<VertexId>>, next_id: &mut VertexId, cycle: &mut Vec<VertexId>| {
            let c = find(&mut tip_class, t);
            match class_vertex[c] {
                Some(v) => v,
                None => {
                    let v = *next_id;
                    *next_id += 1;
                    class_vertex[c] = Some(v);
                    cycle.push(v);
                    v
                }
            }
        };
        // start at face 0; its left spoke is spoke big_m - 1
        let first_tip = tip(big_m - 1, &mut class_vertex, &mut next_id, &mut new_cycle);
        let mut left_tip = first_tip;
        for t in 0..big_m {
            let run = &new_faces[t];
            let mut inner = Vec::with_capacity(fresh[t].saturating_sub(2));
            if fresh[t] >= 2 {
                for _ in 0..fresh[t] - 2 {
                    inner.push(next_id);
                    new_cycle.push(next_id);
                    next_id += 1;
                }
            }
            let right_tip = if fresh[t] == 1 {
                left_tip
            } else {
                tip(t, &mut class_vertex, &mut next_id, &mut new_cycle)
            };
            // outer path left_tip -> inner -> right_tip
            let mut outer = vec![left_tip];
            outer.extend(&inner);
            if fresh[t] >= 2 {
                outer.push(right_tip);
            }
            for w in outer.windows(2) {
                edges.push((w[0], w[1]));
            }
            // spoke to the right neighbor face, from the last old vertex
            edges.push((*run.last().unwrap(), right_tip));
            let mut cycle = run.clone();
            cycle.extend(outer.iter().rev());
            layer_faces.push(cycle);
            left_tip = right_tip;
        }
        debug_assert_eq!(left_tip, first_tip);
        // The last right tip re-closes the ring; drop the duplicate entry if the
        // first tip was pushed again.
        if new_cycle.len() > 1 && new_cycle.last() == new_cycle.first() {
            new_cycle.pop();
        }
        let added = next_id as usize - face_count.len();
        face_count.resize(next_id as usize, 0);
        for f in &layer_faces {
            for &v in f {
                face_count[v as usize] += 1;
            }
        }
        total_faces += big_m;
        if record_faces {
            faces.extend(layer_faces);
        }
        layer_sizes.push(added);
        boundary = new_cycle;
        if edges.len() > max_edges {
            return Err(GenError::Budget(format!(
                "{{{p},{q}}} tiling with {layers} layers exceeds {max_edges} edges"
            )));
        }
    }
    Ok(TilingBuild {
        vertex_count: face_count.len(),
        edges,
        faces: if record_faces { faces } else { Vec::new() },
        face_count: total_faces,
        layer_sizes,
        boundary_cycle: boundary,
    })
}

/// Chooses `γ_0` through `origin`: from the boundary vertex farthest from the
/// origin, through the origin, to the farthest boundary vertex that keeps the
/// concatenation geodesic.
fn axis_through(g: &Graph, origin: VertexId, boundary: &VertexSet) -> Result<(Path, usize), GenError> {
    let from_o = g.bfs_distances(origin);
    let a = boundary
        .iter()
        .max_by_key(|&b| (from_o[b as usize], std::cmp::Reverse(b)))
        .ok_or_else(|| GenError::InvalidSpec("empty boundary".into()))?;
    let from_a = g.bfs_distances(a);
    let da = from_o[a as usize];
    let b = boundary
        .iter()
        .filter(|&b| from_a[b as usize] == da + from_o[b as usize])
        .max_by_key(|&b| (from_o[b as usize], std::cmp::Reverse(b)))
        .unwrap_or(origin);
    let left = g
        .geodesic_from_distances(&from_a, origin)
        .ok_or(GraphError::Disconnected(origin))?;
    let right = g
        .geodesic_from_distances(&from_o, b)
        .ok_or(GraphError::Disconnected(b))?;
    Ok((left.join(&right), da as usize))
}

/// 1-skeleton of the `{p,q}` tessellation around a central `p`-gon.
pub fn gen_hyperbolic_tiling(p: u32, q: u32, layers: u32) -> Result<GraphBundle, GenError> {
    gen_hyperbolic_tiling_with_budget(p, q, layers, DEFAULT_MAX_EDGES)
}

pub fn gen_hyperbolic_tiling_with_budget(
    p: u32,
    q: u32,
    layers: u32,
    max_edges: usize,
) -> Result<GraphBundle, GenError> {
    let build = build_tiling(p, q, layers, max_edges, false)?;
    let graph = Graph::from_edges(build.vertex_count, build.edges)?;
    let boundary_cycle = build.boundary_cycle;
    let boundary = VertexSet::from_vertices(graph.vertex_count(), boundary_cycle.iter().copied());
    let origin = 0;
    let (geodesic, origin_index) = axis_through(&graph, origin, &boundary)?;
    let sides = label_sides_by_arcs(&graph, &geodesic, &boundary_cycle);
    let safe = safe_radius(&graph, origin, &boundary);
    Ok(GraphBundle {
        graph,
        origin,
        geodesic,
        origin_index,
        boundary,
        safe_radius: safe,
        sides,
        spec: GeneratorSpec::Tiling { p, q, layers },
        lattice: None,
    })
}

/// Nested square contours `C_k` (sup-norm spheres of radius `s_k`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleSpec {
    pub sizes: Vec<u32>,
    pub cheap: f64,
    pub default: f64,
}

impl BubbleSpec {
    /// `s_k = 4^k` for `k = 1..=count`, cheap length 1/10, default length 1.
    pub fn geometric(count: u32) -> Self {
        BubbleSpec {
            sizes: (1..=count).map(|k| 4u32.pow(k)).collect(),
            cheap: 0.1,
            default: 1.0,
        }
    }

    pub fn validate(&self, half_width: u32) -> Result<(), GenError> {
        if self.sizes.is_empty() {
            return Err(GenError::InvalidSpec("bubble spec needs at least one square".into()));
        }
        if self.sizes[0] == 0 {
            return Err(GenError::InvalidSpec("bubble squares must have size >= 1".into()));
        }
        for w in self.sizes.windows(2) {
            if w[1] < 4 * w[0] {
                return Err(GenError::InvalidSpec(format!(
                    "bubble sizes must grow by a factor >= 4, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&s) = self.sizes.iter().find(|&&s| s >= half_width) {
            return Err(GenError::InvalidSpec(format!(
                "bubble size {s} does not fit in half-width {half_width}"
            )));
        }
        for (name, w) in [("cheap", self.cheap), ("default", self.default)] {
            if !(w.is_finite() && w > 0.0) {
                return Err(GenError::InvalidSpec(format!("{name} length must be > 0")));
            }
        }
        Ok(())
    }
}

/// `Z²` box with cheap edges along every contour `C_k`.
pub fn gen_bubble_lattice(
    half_width: u32,
    spec: &BubbleSpec,
) -> Result<(GraphBundle, WeightAssignment), GenError> {
    spec.validate(half_width)?;
    let mut bundle = gen_lattice_box(2, half_width)?;
    let weights: Vec<f64> = bundle
        .graph
        .edges()
        .iter()
        .map(|&(u, v)| {
            if bubble_contour(&bundle, spec, u, v).is_some() {
                spec.cheap
            } else {
                spec.default
            }
        })
        .collect();
    bundle.spec = GeneratorSpec::Bubble {
        half_width,
        sizes: Some(spec.sizes.clone()),
        cheap: spec.cheap,
        default: spec.default,
    };
    let sizes: Vec<String> = spec.sizes.iter().map(|s| s.to_string()).collect();
    let w = WeightAssignment::from_values(weights, format!("bubble contours [{}]", sizes.join(",")))
        .map_err(|e| GenError::InvalidSpec(e.to_string()))?;
    Ok((bundle, w))
}

/// Sup-norm of a lattice vertex.
pub fn sup_norm(bundle: &GraphBundle, v: VertexId) -> Option<i64> {
    bundle
        .lattice_coords(v)
        .map(|c| c.iter().map(|x| x.abs()).max().unwrap_or(0))
}

/// Index `k` of the contour containing both endpoints, if any.
pub fn bubble_contour(bundle: &GraphBundle, spec: &BubbleSpec, u: VertexId, v: VertexId) -> Option<usize> {
    let (nu, nv) = (sup_norm(bundle, u)?, sup_norm(bundle, v)?);
    if nu != nv {
        return None;
    }
    spec.sizes.iter().position(|&s| s as i64 == nu)
}

/// Vertices strictly inside `C_k` (sup-norm `< s_k`).
pub fn bubble_interior(bundle: &GraphBundle, spec: &BubbleSpec, k: usize) -> VertexSet {
    let s = spec.sizes[k] as i64;
    VertexSet::from_predicate(bundle.graph.vertex_count(), |v| {
        sup_norm(bundle, v).is_some_and(|n| n < s)
    })
}

/// Reads the edge-list format plus optional `# origin <id>` and
/// `# geodesic <id> <id> …` header lines.
///
/// Without a geodesic header, `γ_0` is a hop-geodesic between the two ends of
/// a double BFS sweep (through the origin when one is given).
pub fn load_edge_list(mut reader: impl Read) -> Result<GraphBundle, GenError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| GenError::Io(e.to_string()))?;
    let mut origin_hdr: Option<VertexId> = None;
    let mut geodesic_hdr: Option<Vec<VertexId>> = None;
    for (idx, line) in text.as_bytes().lines().enumerate() {
        let line = line.map_err(|e| GenError::Io(e.to_string()))?;
        let Some(comment) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        let mut toks = comment.split_whitespace();
        let parse_ids = |toks: std::str::SplitWhitespace<'_>| -> Result<Vec<VertexId>, GenError> {
            toks.map(|t| {
                t.parse::<VertexId>().map_err(|_| {
                    GenError::Graph(GraphError::Parse {
                        line: idx + 1,
                        message: format!("invalid vertex id {t:?} in header"),
                    })
                })
            })
            .collect()
        };
        match toks.next() {
            Some("origin") => {
                let ids = parse_ids(toks)?;
                if ids.len() != 1 {
                    return Err(GenError::Graph(GraphError::Parse {
                        line: idx + 1,
                        message: "`# origin` takes exactly one id".into(),
                    }));
                }
                origin_hdr = Some(ids[0]);
            }
            Some("geodesic") => geodesic_hdr = Some(parse_ids(toks)?),
            _ => {}
        }
    }
    let graph = Graph::parse_edge_list(text.as_bytes())?;
    let n = graph.vertex_count();
    let (geodesic, origin, origin_index) = match (geodesic_hdr, origin_hdr) {
        (Some(ids), origin) => {
            let path = graph.path(ids)?;
            if !graph.is_hop_geodesic(&path) {
                return Err(GenError::InvalidSpec("`# geodesic` path is not a hop-geodesic".into()));
            }
            let origin = origin.unwrap_or(path.at(path.hop_length() / 2));
            let idx = path
                .vertices()
                .iter()
                .position(|&v| v == origin)
                .ok_or_else(|| GenError::InvalidSpec("origin is not on the geodesic".into()))?;
            (path, origin, idx)
        }
        (None, Some(origin)) => {
            graph.check_vertex(origin)?;
            let all = VertexSet::from_predicate(n, |_| true);
            let (path, idx) = axis_through(&graph, origin, &all)?;
            (path, origin, idx)
        }
        (None, None) => {
            let d0 = graph.bfs_distances(0);
            let a = farthest(&d0);
            let da = graph.bfs_distances(a);
            let b = farthest(&da);
            let path = graph
                .geodesic_from_distances(&da, b)
                .ok_or(GraphError::Disconnected(b))?;
            let idx = path.hop_length() / 2;
            (path.clone(), path.at(idx), idx)
        }
    };
    let boundary = VertexSet::from_vertices(n, [geodesic.start(), geodesic.end()]);
    let safe = safe_radius(&graph, origin, &boundary);
    Ok(GraphBundle {
        graph,
        origin,
        geodesic,
        origin_index,
        boundary,
        safe_radius: safe,
        sides: vec![0; n],
        spec: GeneratorSpec::EdgeList {
            path: std::path::PathBuf::new(),
        },
        lattice: None,
    })
}

fn farthest(dist: &[u32]) -> VertexId {
    let mut best = 0usize;
    for (v, &d) in dist.iter().enumerate() {
        if d > dist[best] {
            best = v;
        }
    }
    best as VertexId
}

/// Builds the bundle (and deterministic weights, for bubble lattices) named by
/// a spec, resolving relative edge-list paths against `base_dir`.
pub fn build_bundle(
    spec: &GeneratorSpec,
    base_dir: Option<&std::path::Path>,
) -> Result<(GraphBundle, Option<WeightAssignment>), GenError> {
    Ok(match spec {
        GeneratorSpec::Lattice { dim, half_width } => (gen_lattice_box(*dim, *half_width)?, None),
        GeneratorSpec::Tree { degree, depth } => (gen_regular_tree(*degree, *depth)?, None),
        GeneratorSpec::Tiling { p, q, layers } => (gen_hyperbolic_tiling(*p, *q, *layers)?, None),
        GeneratorSpec::Bubble {
            half_width,
            sizes,
            cheap,
            default,
        } => {
            let sizes = match sizes {
                Some(s) => s.clone(),
                None => {
                    // as many 4^k squares as fit
                    let mut v = Vec::new();
                    let mut s = 4u32;
                    while s < *half_width {
                        v.push(s);
                        s *= 4;
                    }
                    v
                }
            };
            let bspec = BubbleSpec {
                sizes,
                cheap: *cheap,
                default: *default,
            };
            let (b, w) = gen_bubble_lattice(*half_width, &bspec)?;
            (b, Some(w))
        }
        GeneratorSpec::EdgeList { path } => {
            let full = match base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            let file = std::fs::File::open(&full)
                .map_err(|e| GenError::Io(format!("{}: {e}", full.display())))?;
            let mut b = load_edge_list(file)?;
            b.spec = spec.clone();
            (b, None)
        }
    })
}
