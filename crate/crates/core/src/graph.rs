//! Immutable bounded-degree graphs with the hop metric.
//!
//! Vertices are `0..vertex_count`. Edges carry a canonical id: the position of
//! `(min(u, v), max(u, v))` in the lexicographically sorted edge list. Every
//! other module keys edge weights by this id.

use std::collections::VecDeque;
use std::fmt;
use std::io::BufRead;

use thiserror::Error;

pub type VertexId = u32;
pub type EdgeId = u32;

/// Marker for "not reached" in distance arrays.
pub const UNREACHED: u32 = u32::MAX;
/// Marker for "no predecessor".
pub const NO_VERTEX: VertexId = VertexId::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("non-simple: duplicate edge {0}-{1}")]
    NonSimple(VertexId, VertexId),
    #[error("vertex {vertex} out of range (vertex count {count})")]
    InvalidVertex { vertex: u64, count: usize },
    #[error("disconnected: vertex {0} is unreachable")]
    Disconnected(VertexId),
    #[error("vertices {from} and {to} are not adjacent")]
    NotAdjacent { from: VertexId, to: VertexId },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("graph too large: {0}")]
    TooLarge(String),
}

/// Simple connected undirected graph in compressed adjacency form.
#[derive(Clone)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<VertexId>,
    // edge id of each adjacency slot, parallel to `neighbors`
    slot_edges: Vec<EdgeId>,
    edges: Vec<(VertexId, VertexId)>,
    max_degree: usize,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("vertices", &self.vertex_count())
            .field("edges", &self.edge_count())
            .field("max_degree", &self.max_degree)
            .finish()
    }
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicate edges and disconnected input.
    pub fn from_edges(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (VertexId, VertexId)>,
    ) -> Result<Self, GraphError> {
        if vertex_count == 0 {
            return Err(GraphError::Empty);
        }
        if vertex_count >= VertexId::MAX as usize {
            return Err(GraphError::TooLarge(format!("{vertex_count} vertices")));
        }
        let mut canon: Vec<(VertexId, VertexId)> = Vec::new();
        for (u, v) in edges {
            for w in [u, v] {
                if w as usize >= vertex_count {
                    return Err(GraphError::InvalidVertex {
                        vertex: w as u64,
                        count: vertex_count,
                    });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::NonSimple(w[0].0, w[0].1));
        }
        if canon.len() >= EdgeId::MAX as usize {
            return Err(GraphError::TooLarge(format!("{} edges", canon.len())));
        }

        let mut degree = vec![0usize; vertex_count];
        for &(u, v) in &canon {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        let mut cursor = offsets[..vertex_count].to_vec();
        let mut neighbors = vec![0; total];
        let mut slot_edges = vec![0; total];
        // Edges are sorted by (min, max); filling in this order leaves each list
        // sorted for the smaller endpoint but not the larger one, so sort after.
        for (id, &(u, v)) in canon.iter().enumerate() {
            for (a, b) in [(u, v), (v, u)] {
                let slot = cursor[a as usize];
                neighbors[slot] = b;
                slot_edges[slot] = id as EdgeId;
                cursor[a as usize] += 1;
            }
        }
        for u in 0..vertex_count {
            let range = offsets[u]..offsets[u + 1];
            let mut pairs: Vec<(VertexId, EdgeId)> = neighbors[range.clone()]
                .iter()
                .copied()
                .zip(slot_edges[range.clone()].iter().copied())
                .collect();
            pairs.sort_unstable();
            for (k, (n, e)) in pairs.into_iter().enumerate() {
                neighbors[range.start + k] = n;
                slot_edges[range.start + k] = e;
            }
        }
        let max_degree = degree.iter().copied().max().unwrap_or(0);
        let g = Graph {
            offsets,
            neighbors,
            slot_edges,
            edges: canon,
            max_degree,
        };
        let dist = g.bfs_distances(0);
        if let Some(v) = dist.iter().position(|&d| d == UNREACHED) {
            return Err(GraphError::Disconnected(v as VertexId));
        }
        Ok(g)
    }

    /// Parses the `u v` per line edge-list format (`#` starts a comment).
    ///
    /// The vertex count is one more than the largest id mentioned.
    pub fn parse_edge_list(reader: impl BufRead) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        let mut max_id: Option<u64> = None;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| GraphError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let ids: Vec<&str> = body.split_whitespace().collect();
            if ids.len() != 2 {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: format!("expected `u v`, found {body:?}"),
                });
            }
            let mut pair = [0u64; 2];
            for (slot, tok) in pair.iter_mut().zip(&ids) {
                *slot = tok.parse().map_err(|_| GraphError::Parse {
                    line: line_no,
                    message: format!("invalid vertex id {tok:?}"),
                })?;
                if *slot >= VertexId::MAX as u64 {
                    return Err(GraphError::Parse {
                        line: line_no,
                        message: format!("vertex id {slot} too large"),
                    });
                }
            }
            max_id = Some(max_id.map_or(pair[0].max(pair[1]), |m| m.max(pair[0]).max(pair[1])));
            edges.push((pair[0] as VertexId, pair[1] as VertexId));
        }
        let count = max_id.map_or(0, |m| m as usize + 1);
        Graph::from_edges(count, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Exact maximum degree `q`.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    /// Sorted neighbor list.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.neighbors[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    /// `(neighbor, edge id)` pairs in ascending neighbor order.
    pub fn incident(&self, v: VertexId) -> impl Iterator<Item = (VertexId, EdgeId)> + '_ {
        let r = self.offsets[v as usize]..self.offsets[v as usize + 1];
        self.neighbors[r.clone()]
            .iter()
            .copied()
            .zip(self.slot_edges[r].iter().copied())
    }

    /// Canonical edge list, sorted, each pair with `u < v`.
    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn edge_endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.edges[e as usize]
    }

    pub fn edge_id(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        let r = self.offsets[u as usize]..self.offsets[u as usize + 1];
        self.neighbors[r.clone()]
            .binary_search(&v)
            .ok()
            .map(|k| self.slot_edges[r.start + k])
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        (v as usize) < self.vertex_count()
    }

    pub(crate) fn check_vertex(&self, v: VertexId) -> Result<(), GraphError> {
        if self.contains_vertex(v) {
            Ok(())
        } else {
            Err(GraphError::InvalidVertex {
                vertex: v as u64,
                count: self.vertex_count(),
            })
        }
    }

    /// Hop distances from `source` to every vertex.
    pub fn bfs_distances(&self, source: VertexId) -> Vec<u32> {
        self.multi_source_bfs(std::iter::once(source), None)
    }

    /// Hop distance to the nearest source. With `limit`, vertices farther than
    /// `limit` stay [`UNREACHED`].
    pub fn multi_source_bfs(
        &self,
        sources: impl IntoIterator<Item = VertexId>,
        limit: Option<u32>,
    ) -> Vec<u32> {
        let mut dist = vec![UNREACHED; self.vertex_count()];
        let mut queue = VecDeque::new();
        for s in sources {
            if dist[s as usize] != 0 {
                dist[s as usize] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            if limit.is_some_and(|l| du >= l) {
                continue;
            }
            for &v in self.neighbors(u) {
                if dist[v as usize] == UNREACHED {
                    dist[v as usize] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// The simplicial metric `d(u, v)`.
    pub fn hop_distance(&self, u: VertexId, v: VertexId) -> Result<u32, GraphError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Ok(0);
        }
        let mut dist = vec![UNREACHED; self.vertex_count()];
        let mut queue = VecDeque::from([u]);
        dist[u as usize] = 0;
        while let Some(a) = queue.pop_front() {
            for &b in self.neighbors(a) {
                if dist[b as usize] == UNREACHED {
                    dist[b as usize] = dist[a as usize] + 1;
                    if b == v {
                        return Ok(dist[b as usize]);
                    }
                    queue.push_back(b);
                }
            }
        }
        Err(GraphError::Disconnected(v))
    }

    /// A hop-geodesic from `u` to `v`. Each vertex's predecessor is its
    /// smallest-id neighbor one step closer to `u`.
    pub fn hop_geodesic(&self, u: VertexId, v: VertexId) -> Result<Path, GraphError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        let dist = self.bfs_distances(u);
        self.geodesic_from_distances(&dist, v)
            .ok_or(GraphError::Disconnected(v))
    }

    /// Walks back from `target` along the smallest-id predecessor in a BFS
    /// distance field.
    pub fn geodesic_from_distances(&self, dist: &[u32], target: VertexId) -> Option<Path> {
        if dist[target as usize] == UNREACHED {
            return None;
        }
        let mut rev = vec![target];
        let mut cur = target;
        while dist[cur as usize] > 0 {
            let want = dist[cur as usize] - 1;
            cur = *self
                .neighbors(cur)
                .iter()
                .find(|&&w| dist[w as usize] == want)?;
            rev.push(cur);
        }
        rev.reverse();
        Some(Path::new_unchecked(rev))
    }

    /// `B(center, r)`.
    pub fn ball(&self, center: VertexId, r: u32) -> VertexSet {
        let dist = self.multi_source_bfs(std::iter::once(center), Some(r));
        VertexSet::from_predicate(self.vertex_count(), |v| dist[v as usize] != UNREACHED)
    }

    /// Union of `B(v, r)` over the vertices `v` of `path`.
    pub fn path_neighborhood(&self, path: &Path, r: u32) -> VertexSet {
        let dist = self.multi_source_bfs(path.vertices().iter().copied(), Some(r));
        VertexSet::from_predicate(self.vertex_count(), |v| dist[v as usize] != UNREACHED)
    }

    /// Hop distance from every vertex to the vertex set of `path`.
    pub fn distance_to_path(&self, path: &Path) -> Vec<u32> {
        self.multi_source_bfs(path.vertices().iter().copied(), None)
    }

    /// Checks that consecutive vertices of `vertices` are adjacent.
    pub fn path(&self, vertices: Vec<VertexId>) -> Result<Path, GraphError> {
        if vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        for &v in &vertices {
            self.check_vertex(v)?;
        }
        for w in vertices.windows(2) {
            if self.edge_id(w[0], w[1]).is_none() {
                return Err(GraphError::NotAdjacent {
                    from: w[0],
                    to: w[1],
                });
            }
        }
        Ok(Path::new_unchecked(vertices))
    }

    /// Edge ids along `path`, in order.
    pub fn path_edges(&self, path: &Path) -> Vec<EdgeId> {
        path.vertices()
            .windows(2)
            .map(|w| {
                self.edge_id(w[0], w[1])
                    .expect("path vertices must be adjacent")
            })
            .collect()
    }

    /// `true` iff `d(p(i), p(j)) = |j - i|` for every pair of path indices.
    pub fn is_hop_geodesic(&self, path: &Path) -> bool {
        let verts = path.vertices();
        verts.iter().enumerate().all(|(i, &v)| {
            let dist = self.bfs_distances(v);
            verts
                .iter()
                .enumerate()
                .all(|(j, &w)| dist[w as usize] as usize == i.abs_diff(j))
        })
    }

    /// Writes the edge-list text format.
    pub fn write_edge_list(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        for &(u, v) in &self.edges {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }
}

/// A walk `(γ(0), …, γ(n))` in a host graph; `hop_length() = n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(transparent)]
pub struct Path {
    vertices: Vec<VertexId>,
}

impl Path {
    /// Wraps a vertex sequence without checking adjacency. Use
    /// [`Graph::path`] for validated construction.
    pub fn new_unchecked(vertices: Vec<VertexId>) -> Self {
        assert!(!vertices.is_empty(), "a path has at least one vertex");
        Path { vertices }
    }

    pub fn single(v: VertexId) -> Self {
        Path { vertices: vec![v] }
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<VertexId> {
        self.vertices
    }

    pub fn hop_length(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn start(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn end(&self) -> VertexId {
        *self.vertices.last().unwrap()
    }

    pub fn at(&self, i: usize) -> VertexId {
        self.vertices[i]
    }

    /// `γ([i, j])`.
    pub fn subpath(&self, i: usize, j: usize) -> Path {
        assert!(i <= j && j < self.vertices.len(), "subpath [{i}, {j}] out of range");
        Path {
            vertices: self.vertices[i..=j].to_vec(),
        }
    }

    pub fn reversed(&self) -> Path {
        let mut v = self.vertices.clone();
        v.reverse();
        Path { vertices: v }
    }

    /// Concatenates `self` and `other`, which must start where `self` ends.
    pub fn join(&self, other: &Path) -> Path {
        assert_eq!(self.end(), other.start(), "paths do not meet");
        let mut v = self.vertices.clone();
        v.extend_from_slice(&other.vertices[1..]);
        Path { vertices: v }
    }
}

/// Set of vertices with O(1) membership and sorted enumeration.
#[derive(Clone, PartialEq, Eq)]
pub struct VertexSet {
    mask: Vec<bool>,
    members: Vec<VertexId>,
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members.iter()).finish()
    }
}

impl VertexSet {
    pub fn empty(universe: usize) -> Self {
        VertexSet {
            mask: vec![false; universe],
            members: Vec::new(),
        }
    }

    pub fn from_predicate(universe: usize, mut pred: impl FnMut(VertexId) -> bool) -> Self {
        let mask: Vec<bool> = (0..universe as VertexId).map(&mut pred).collect();
        let members = mask
            .iter()
            .enumerate()
            .filter_map(|(v, &m)| m.then_some(v as VertexId))
            .collect();
        VertexSet { mask, members }
    }

    pub fn from_vertices(universe: usize, vertices: impl IntoIterator<Item = VertexId>) -> Self {
        let mut mask = vec![false; universe];
        for v in vertices {
            mask[v as usize] = true;
        }
        let members = mask
            .iter()
            .enumerate()
            .filter_map(|(v, &m)| m.then_some(v as VertexId))
            .collect();
        VertexSet { mask, members }
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.mask.get(v as usize).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.members.iter().copied()
    }

    pub fn as_slice(&self) -> &[VertexId] {
        &self.members
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.members.iter().all(|&v| other.contains(v))
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        VertexSet::from_predicate(self.universe().max(other.universe()), |v| {
            self.contains(v) || other.contains(v)
        })
    }
}
