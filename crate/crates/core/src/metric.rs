//! The random metric `d_ω`: exact label-setting shortest paths.
//!
//! Tie-breaking: every vertex keeps the smallest-id predecessor among all
//! co-optimal ones. All co-optimal predecessors of a vertex are settled before
//! it (weights are strictly positive), so the rule does not depend on heap
//! order and the selected geodesic is a deterministic function of `ω`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use thiserror::Error;

use crate::fpp::{EdgeWeights, UnitWeights};
use crate::graph::{Graph, GraphError, Path, VertexId, VertexSet, NO_VERTEX, UNREACHED};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("disconnected: no path from {from} to {to}")]
    Disconnected { from: VertexId, to: VertexId },
    #[error("endpoint {0} lies inside the forbidden set")]
    EndpointForbidden(VertexId),
}

/// `|γ|_ω` or `d_ω(u, v)`, in length units.
pub type WeightedLength = f64;

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    vertex: VertexId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties broken by smaller vertex id
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source result: distances and tie-broken predecessors.
#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    source: VertexId,
    dist: Vec<f64>,
    pred: Vec<VertexId>,
}

impl ShortestPathTree {
    pub fn source(&self) -> VertexId {
        self.source
    }

    /// `f64::INFINITY` for vertices not reached.
    pub fn distance(&self, v: VertexId) -> f64 {
        self.dist[v as usize]
    }

    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    pub fn predecessor(&self, v: VertexId) -> Option<VertexId> {
        let p = self.pred[v as usize];
        (p != NO_VERTEX).then_some(p)
    }

    /// Path from the source to `v` along selected predecessors.
    pub fn path_to(&self, v: VertexId) -> Option<Path> {
        if !self.dist[v as usize].is_finite() {
            return None;
        }
        let mut rev = vec![v];
        let mut cur = v;
        while cur != self.source {
            cur = self.pred[cur as usize];
            rev.push(cur);
        }
        rev.reverse();
        Some(Path::new_unchecked(rev))
    }

    /// Debug dump, one `vertex distance predecessor` line per reached vertex.
    pub fn write_dump(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        for (v, d) in self.dist.iter().enumerate() {
            if d.is_finite() {
                let p = self.pred[v];
                if p == NO_VERTEX {
                    writeln!(out, "{v} {d:e} -")?;
                } else {
                    writeln!(out, "{v} {d:e} {p}")?;
                }
            }
        }
        Ok(())
    }
}

/// Which vertices a search may pass through.
#[derive(Debug, Clone, Copy)]
pub struct SearchLimits<'a> {
    /// Interior vertices must avoid this set; the target may lie in it only
    /// if it is the explicit target.
    pub forbidden: Option<&'a VertexSet>,
    /// Stop once this vertex is settled.
    pub target: Option<VertexId>,
}

/// Label-setting search from `source` (binary heap).
pub fn dijkstra<W: EdgeWeights + ?Sized>(
    g: &Graph,
    weights: &W,
    source: VertexId,
    limits: SearchLimits<'_>,
) -> ShortestPathTree {
    let n = g.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NO_VERTEX; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source as usize] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        vertex: source,
    });
    while let Some(HeapEntry { dist: d, vertex: u }) = heap.pop() {
        if settled[u as usize] {
            continue;
        }
        settled[u as usize] = true;
        if limits.target == Some(u) {
            break;
        }
        // a forbidden vertex can only be reached as the target
        if u != source && limits.forbidden.is_some_and(|f| f.contains(u)) {
            continue;
        }
        for (v, e) in g.incident(u) {
            if settled[v as usize] {
                continue;
            }
            let nd = d + weights.weight(e);
            let slot = &mut dist[v as usize];
            if nd < *slot {
                *slot = nd;
                pred[v as usize] = u;
                heap.push(HeapEntry { dist: nd, vertex: v });
            } else if nd == *slot && u < pred[v as usize] {
                pred[v as usize] = u;
            }
        }
    }
    // Unsettled labels are tentative; drop them so callers never see them, and
    // keep forbidden non-target vertices out of the tree.
    for v in 0..n {
        if !settled[v] {
            dist[v] = f64::INFINITY;
            pred[v] = NO_VERTEX;
        }
    }
    ShortestPathTree { source, dist, pred }
}

/// Reusable buffers for repeated point-to-point searches on one graph.
///
/// Labels are versioned by an epoch counter, so a query costs time in the
/// number of vertices it touches rather than the graph size. Results match
/// [`weighted_geodesic_with_length`] exactly.
pub struct SearchWorkspace {
    dist: Vec<f64>,
    pred: Vec<VertexId>,
    seen: Vec<u32>,
    done: Vec<u32>,
    epoch: u32,
    heap: BinaryHeap<HeapEntry>,
    settled: usize,
    back: Option<Box<Side>>,
}

/// Labels for the reverse half of a bidirectional search.
struct Side {
    dist: Vec<f64>,
    pred: Vec<VertexId>,
    seen: Vec<u32>,
    done: Vec<u32>,
    heap: BinaryHeap<HeapEntry>,
}

impl SearchWorkspace {
    pub fn new(vertex_count: usize) -> Self {
        SearchWorkspace {
            dist: vec![f64::INFINITY; vertex_count],
            pred: vec![NO_VERTEX; vertex_count],
            seen: vec![0; vertex_count],
            done: vec![0; vertex_count],
            epoch: 0,
            heap: BinaryHeap::new(),
            settled: 0,
            back: None,
        }
    }

    /// Vertices settled by the last query.
    pub fn last_settled(&self) -> usize {
        self.settled
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen.fill(0);
            self.done.fill(0);
            if let Some(b) = self.back.as_mut() {
                b.seen.fill(0);
                b.done.fill(0);
            }
            self.epoch = 1;
        }
        self.heap.clear();
        if let Some(b) = self.back.as_mut() {
            b.heap.clear();
        }
        self.settled = 0;
    }

    /// Shortest `u`–`v` path by simultaneous searches from both ends.
    ///
    /// Returns a shortest path, with its length re-summed from `u` so it is
    /// bit-identical to the one-sided value. When several geodesics tie, the
    /// one returned need not be the tie-rule selection of [`Self::geodesic`];
    /// use it only where geodesics are almost surely unique.
    pub fn geodesic_bidirectional<W: EdgeWeights + ?Sized>(
        &mut self,
        g: &Graph,
        weights: &W,
        u: VertexId,
        v: VertexId,
    ) -> Result<(Path, WeightedLength), MetricError> {
        g.check_vertex(u)?;
        g.check_vertex(v)?;
        let n = g.vertex_count();
        assert_eq!(self.dist.len(), n, "workspace built for another graph");
        if self.back.is_none() {
            self.back = Some(Box::new(Side {
                dist: vec![f64::INFINITY; n],
                pred: vec![NO_VERTEX; n],
                seen: vec![0; n],
                done: vec![0; n],
                heap: BinaryHeap::new(),
            }));
        }
        self.next_epoch();
        if u == v {
            return Ok((Path::single(u), 0.0));
        }
        let ep = self.epoch;
        let mut back = self.back.take().unwrap();
        let mut fwd = Side {
            dist: std::mem::take(&mut self.dist),
            pred: std::mem::take(&mut self.pred),
            seen: std::mem::take(&mut self.seen),
            done: std::mem::take(&mut self.done),
            heap: std::mem::take(&mut self.heap),
        };
        for (side, s) in [(&mut fwd, u), (&mut *back, v)] {
            side.seen[s as usize] = ep;
            side.dist[s as usize] = 0.0;
            side.pred[s as usize] = NO_VERTEX;
            side.heap.push(HeapEntry { dist: 0.0, vertex: s });
        }
        let mut best = f64::INFINITY;
        let mut meet: Option<(VertexId, VertexId)> = None;
        let mut settled = 0;
        loop {
            let top = |h: &BinaryHeap<HeapEntry>| h.peek().map_or(f64::INFINITY, |e| e.dist);
            let (tf, tb) = (top(&fwd.heap), top(&back.heap));
            if tf + tb >= best || (tf.is_infinite() && tb.is_infinite()) {
                break;
            }
            let forward = tf <= tb;
            let (this, other) = if forward {
                (&mut fwd, &*back)
            } else {
                (&mut *back, &fwd)
            };
            let HeapEntry { dist: d, vertex: a } = this.heap.pop().unwrap();
            if this.done[a as usize] == ep {
                continue;
            }
            this.done[a as usize] = ep;
            settled += 1;
            for (b, e) in g.incident(a) {
                let bi = b as usize;
                let nd = d + weights.weight(e);
                if this.done[bi] != ep && (this.seen[bi] != ep || nd < this.dist[bi]) {
                    this.seen[bi] = ep;
                    this.dist[bi] = nd;
                    this.pred[bi] = a;
                    this.heap.push(HeapEntry { dist: nd, vertex: b });
                }
                if other.seen[bi] == ep {
                    let through = nd + other.dist[bi];
                    if through < best {
                        best = through;
                        meet = Some(if forward { (a, b) } else { (b, a) });
                    }
                }
            }
        }
        let result = match meet {
            None => Err(MetricError::Disconnected { from: u, to: v }),
            Some((a, b)) => {
                let mut verts = vec![a];
                let mut cur = a;
                while cur != u {
                    cur = fwd.pred[cur as usize];
                    verts.push(cur);
                }
                verts.reverse();
                let mut cur = b;
                verts.push(b);
                while cur != v {
                    cur = back.pred[cur as usize];
                    verts.push(cur);
                }
                let path = Path::new_unchecked(verts);
                let len = path_weight(g, weights, &path);
                Ok((path, len))
            }
        };
        self.dist = fwd.dist;
        self.pred = fwd.pred;
        self.seen = fwd.seen;
        self.done = fwd.done;
        self.heap = fwd.heap;
        self.back = Some(back);
        self.settled = settled;
        result
    }

    /// Selected `ω`-geodesic from `u` to `v` and its length.
    pub fn geodesic<W: EdgeWeights + ?Sized>(
        &mut self,
        g: &Graph,
        weights: &W,
        u: VertexId,
        v: VertexId,
    ) -> Result<(Path, WeightedLength), MetricError> {
        g.check_vertex(u)?;
        g.check_vertex(v)?;
        assert_eq!(self.dist.len(), g.vertex_count(), "workspace built for another graph");
        self.next_epoch();
        let ep = self.epoch;
        self.seen[u as usize] = ep;
        self.dist[u as usize] = 0.0;
        self.pred[u as usize] = NO_VERTEX;
        self.heap.push(HeapEntry { dist: 0.0, vertex: u });
        let mut reached = false;
        while let Some(HeapEntry { dist: d, vertex: a }) = self.heap.pop() {
            if self.done[a as usize] == ep {
                continue;
            }
            self.done[a as usize] = ep;
            self.settled += 1;
            if a == v {
                reached = true;
                break;
            }
            for (b, e) in g.incident(a) {
                let bi = b as usize;
                if self.done[bi] == ep {
                    continue;
                }
                let nd = d + weights.weight(e);
                if self.seen[bi] != ep {
                    self.seen[bi] = ep;
                    self.dist[bi] = nd;
                    self.pred[bi] = a;
                    self.heap.push(HeapEntry { dist: nd, vertex: b });
                } else if nd < self.dist[bi] {
                    self.dist[bi] = nd;
                    self.pred[bi] = a;
                    self.heap.push(HeapEntry { dist: nd, vertex: b });
                } else if nd == self.dist[bi] && a < self.pred[bi] {
                    self.pred[bi] = a;
                }
            }
        }
        if !reached {
            return Err(MetricError::Disconnected { from: u, to: v });
        }
        let mut rev = vec![v];
        let mut cur = v;
        while cur != u {
            cur = self.pred[cur as usize];
            rev.push(cur);
        }
        rev.reverse();
        Ok((Path::new_unchecked(rev), self.dist[v as usize]))
    }
}

/// Full single-source tree (reused across many targets within one `ω`).
pub fn shortest_path_tree<W: EdgeWeights + ?Sized>(
    g: &Graph,
    weights: &W,
    source: VertexId,
) -> ShortestPathTree {
    dijkstra(
        g,
        weights,
        source,
        SearchLimits {
            forbidden: None,
            target: None,
        },
    )
}

/// `d_ω(u, v)`.
pub fn weighted_distance<W: EdgeWeights + ?Sized>(
    g: &Graph,
    weights: &W,
    u: VertexId,
    v: VertexId,
) -> Result<WeightedLength, MetricError> {
    Ok(weighted_geodesic_with_length(g, weights, u, v)?.1)
}

/// The selected `ω`-geodesic from `u` to `v`.
pub fn weighted_geodesic<W: EdgeWeights + ?Sized>(
    g: &Graph,
    weights: &W,
    u: VertexId,
    v: VertexId,
) -> Result<Path, MetricError> {
    Ok(weighted_geodesic_with_length(g, weights, u, v)?.0)
}

pub fn weighted_geodesic_with_length<W: EdgeWeights + ?Sized>(
    g: &Graph,
    weights: &W,
    u: VertexId,
    v: VertexId,
) -> Result<(Path, WeightedLength), MetricError> {
    g.check_vertex(u)?;
    g.check_vertex(v)?;
    let tree = dijkstra(
        g,
        weights,
        u,
        SearchLimits {
            forbidden: None,
            target: Some(v),
        },
    );
    let path = tree
        .path_to(v)
        .ok_or(MetricError::Disconnected { from: u, to: v })?;
    Ok((path, tree.distance(v)))
}

/// `|γ|_ω`: sum of edge weights along `path`, left to right.
pub fn path_weight<W: EdgeWeights + ?Sized>(g: &Graph, weights: &W, path: &Path) -> WeightedLength {
    path.vertices()
        .windows(2)
        .map(|w| {
            weights.weight(
                g.edge_id(w[0], w[1])
                    .expect("path vertices must be adjacent"),
            )
        })
        .fold(0.0, |acc, x| acc + x)
}

#[derive(Debug, Clone, Copy)]
pub enum PathMode<'a, W: ?Sized> {
    Hop,
    Weighted(&'a W),
}

/// Shortest `u`–`v` path whose interior vertices avoid `forbidden`.
///
/// Returns `Ok(None)` when no such path exists.
pub fn restricted_shortest_path<W: EdgeWeights + ?Sized>(
    g: &Graph,
    forbidden: &VertexSet,
    u: VertexId,
    v: VertexId,
    mode: PathMode<'_, W>,
) -> Result<Option<Path>, MetricError> {
    g.check_vertex(u)?;
    g.check_vertex(v)?;
    for w in [u, v] {
        if forbidden.contains(w) {
            return Err(MetricError::EndpointForbidden(w));
        }
    }
    let limits = SearchLimits {
        forbidden: Some(forbidden),
        target: Some(v),
    };
    Ok(match mode {
        PathMode::Hop => restricted_bfs(g, u, limits).path_to(v),
        PathMode::Weighted(w) => dijkstra(g, w, u, limits).path_to(v),
    })
}

/// Hop-metric search with the same selection rule and limits as [`dijkstra`].
///
/// Equivalent to `dijkstra` with [`UnitWeights`] but linear time. Vertices in
/// `forbidden` other than the source are reachable but never expanded.
pub fn restricted_bfs(g: &Graph, source: VertexId, limits: SearchLimits<'_>) -> ShortestPathTree {
    let n = g.vertex_count();
    let mut hops = vec![UNREACHED; n];
    let mut pred = vec![NO_VERTEX; n];
    let mut queue = VecDeque::from([source]);
    hops[source as usize] = 0;
    let mut stop_level = UNREACHED;
    while let Some(u) = queue.pop_front() {
        let hu = hops[u as usize];
        if hu >= stop_level {
            break;
        }
        if u != source && limits.forbidden.is_some_and(|f| f.contains(u)) {
            continue;
        }
        for &v in g.neighbors(u) {
            let hv = &mut hops[v as usize];
            if *hv == UNREACHED {
                *hv = hu + 1;
                pred[v as usize] = u;
                queue.push_back(v);
                if limits.target == Some(v) {
                    // finish this level so every co-optimal predecessor is seen
                    stop_level = hu + 1;
                }
            } else if *hv == hu + 1 && u < pred[v as usize] {
                pred[v as usize] = u;
            }
        }
    }
    let dist = hops
        .iter()
        .map(|&h| if h == UNREACHED { f64::INFINITY } else { h as f64 })
        .collect();
    ShortestPathTree { source, dist, pred }
}

/// Hop distances avoiding `forbidden` in the interior, from `source` to all
/// vertices (`UNREACHED` where no such path exists).
pub fn restricted_hop_distances(g: &Graph, source: VertexId, forbidden: &VertexSet) -> Vec<u32> {
    let tree = restricted_bfs(
        g,
        source,
        SearchLimits {
            forbidden: Some(forbidden),
            target: None,
        },
    );
    tree.dist
        .iter()
        .map(|&d| if d.is_finite() { d as u32 } else { UNREACHED })
        .collect()
}

/// Unit-weight convenience wrapper used by tests and diagnostics.
pub fn hop_tree(g: &Graph, source: VertexId) -> ShortestPathTree {
    restricted_bfs(
        g,
        source,
        SearchLimits {
            forbidden: None,
            target: None,
        },
    )
}

/// Whether some co-optimal `u`–`v` geodesic meets `targets`.
///
/// A vertex `w` lies on a geodesic iff `d(u,w) + d(w,v) = d(u,v)`, compared
/// with relative tolerance `rel_tol` to absorb summation order.
pub fn any_geodesic_meets<W: EdgeWeights + ?Sized>(
    g: &Graph,
    weights: &W,
    u: VertexId,
    v: VertexId,
    targets: &VertexSet,
    rel_tol: f64,
) -> Result<bool, MetricError> {
    let from_u = shortest_path_tree(g, weights, u);
    let total = from_u.distance(v);
    if !total.is_finite() {
        return Err(MetricError::Disconnected { from: u, to: v });
    }
    let from_v = shortest_path_tree(g, weights, v);
    let tol = rel_tol * total.max(1.0);
    Ok(targets
        .iter()
        .any(|w| (from_u.distance(w) + from_v.distance(w) - total).abs() <= tol))
}

/// Hop tree through the generic weighted path (used to cross-check BFS).
pub fn unit_dijkstra(g: &Graph, source: VertexId, limits: SearchLimits<'_>) -> ShortestPathTree {
    dijkstra(g, &UnitWeights, source, limits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpp::CounterRng;

    fn grid(w: u32, h: u32) -> Graph {
        let id = |x: u32, y: u32| y * w + x;
        let mut edges = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if x + 1 < w {
                    edges.push((id(x, y), id(x + 1, y)));
                }
                if y + 1 < h {
                    edges.push((id(x, y), id(x, y + 1)));
                }
            }
        }
        Graph::from_edges((w * h) as usize, edges).unwrap()
    }

    /// Minimum weight over all simple paths, by exhaustive DFS.
    fn brute_force(g: &Graph, w: &[f64], u: VertexId, v: VertexId) -> (f64, Vec<Vec<VertexId>>) {
        let mut best = f64::INFINITY;
        let mut all = Vec::new();
        let mut stack = vec![(vec![u], 0.0)];
        while let Some((p, len)) = stack.pop() {
            let last = *p.last().unwrap();
            if last == v {
                all.push((p.clone(), len));
                best = best.min(len);
                continue;
            }
            for (n, e) in g.incident(last) {
                if !p.contains(&n) {
                    let mut q = p.clone();
                    q.push(n);
                    stack.push((q, len + w[e as usize]));
                }
            }
        }
        let optimal = all
            .into_iter()
            .filter(|(_, l)| (*l - best).abs() <= 1e-9)
            .map(|(p, _)| p)
            .collect();
        (best, optimal)
    }

    #[test]
    fn distance_examples() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let w = vec![0.7];
        assert_eq!(weighted_distance(&g, &w, 0, 0).unwrap(), 0.0);
        assert_eq!(weighted_distance(&g, &w, 0, 1).unwrap(), 0.7);
        // 4-cycle with one heavy edge between 3 and 0
        let c4 = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let mut w = vec![1.0; 4];
        w[c4.edge_id(0, 3).unwrap() as usize] = 10.0;
        assert_eq!(weighted_distance(&c4, &w, 0, 3).unwrap(), 3.0);
        let (bf, _) = brute_force(&c4, &w, 0, 3);
        assert_eq!(bf, 3.0);
    }

    #[test]
    fn two_by_two_ties_break_to_smaller_middle_vertex() {
        let g = grid(2, 2);
        let w = vec![1.0; g.edge_count()];
        for _ in 0..3 {
            let p = weighted_geodesic(&g, &w, 0, 3).unwrap();
            assert_eq!(p.vertices(), &[0, 1, 3]);
        }
        let (_, optimal) = brute_force(&g, &w, 0, 3);
        let mut mids: Vec<VertexId> = optimal.iter().map(|p| p[1]).collect();
        mids.sort();
        assert_eq!(mids, vec![1, 2]);
    }

    #[test]
    fn tree_geodesic_is_the_tree_path() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (1, 3), (3, 4), (3, 5)]).unwrap();
        let w = vec![1.0; g.edge_count()];
        assert_eq!(weighted_geodesic(&g, &w, 2, 5).unwrap().vertices(), &[2, 1, 3, 5]);
    }

    #[test]
    fn path_weight_is_additive() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let w = vec![0.5, 1.5];
        assert_eq!(path_weight(&g, &w, &Path::single(1)), 0.0);
        let p = g.path(vec![0, 1, 2]).unwrap();
        assert_eq!(path_weight(&g, &w, &p), 2.0);
        assert_eq!(
            path_weight(&g, &w, &p),
            path_weight(&g, &w, &p.subpath(0, 1)) + path_weight(&g, &w, &p.subpath(1, 2))
        );
    }

    /// Iterative deepening over simple paths whose vertices all avoid `forbidden`.
    fn brute_force_avoiding_hops(g: &Graph, forbidden: &VertexSet, u: VertexId, v: VertexId) -> usize {
        fn dfs(g: &Graph, f: &VertexSet, at: VertexId, v: VertexId, left: usize, seen: &mut Vec<bool>) -> bool {
            if at == v {
                return true;
            }
            if left == 0 {
                return false;
            }
            for &w in g.neighbors(at) {
                if !seen[w as usize] && !f.contains(w) {
                    seen[w as usize] = true;
                    let hit = dfs(g, f, w, v, left - 1, seen);
                    seen[w as usize] = false;
                    if hit {
                        return true;
                    }
                }
            }
            false
        }
        (0..=g.vertex_count())
            .find(|&budget| {
                let mut seen = vec![false; g.vertex_count()];
                seen[u as usize] = true;
                dfs(g, forbidden, u, v, budget, &mut seen)
            })
            .unwrap()
    }

    #[test]
    fn restricted_examples() {
        let g = grid(11, 11);
        let id = |x: i32, y: i32| ((y + 5) * 11 + (x + 5)) as VertexId;
        let w = vec![1.0; g.edge_count()];
        let empty = VertexSet::empty(g.vertex_count());
        let free = restricted_shortest_path(&g, &empty, id(-5, 0), id(5, 0), PathMode::Weighted(&w))
            .unwrap()
            .unwrap();
        assert_eq!(free.hop_length(), 10);
        let ball = g.ball(id(0, 0), 2);
        let detour = restricted_shortest_path::<[f64]>(&g, &ball, id(-5, 0), id(5, 0), PathMode::Hop)
            .unwrap()
            .unwrap();
        // the closed hop ball of radius 2 is a diamond; clearing it takes 8 steps on each side
        assert_eq!(detour.hop_length(), 16);
        assert_eq!(detour.hop_length(), brute_force_avoiding_hops(&g, &ball, id(-5, 0), id(5, 0)));
        assert!(detour.vertices().iter().all(|&v| !ball.contains(v)));
        let ball1 = g.ball(id(0, 0), 1);
        let detour1 = restricted_shortest_path::<[f64]>(&g, &ball1, id(-5, 0), id(5, 0), PathMode::Hop)
            .unwrap()
            .unwrap();
        assert_eq!(detour1.hop_length(), 14);
        assert!(matches!(
            restricted_shortest_path::<[f64]>(&g, &ball, id(0, 0), id(5, 0), PathMode::Hop),
            Err(MetricError::EndpointForbidden(_))
        ));
        // tree cut at the root
        let t = Graph::from_edges(5, [(0, 1), (0, 2), (1, 3), (2, 4)]).unwrap();
        let root = VertexSet::from_vertices(5, [0]);
        assert_eq!(
            restricted_shortest_path::<[f64]>(&t, &root, 3, 4, PathMode::Hop).unwrap(),
            None
        );
    }

    #[test]
    fn forbidden_target_is_reachable_as_endpoint_only() {
        // 0-1-2, with 1 forbidden: 0 -> 2 is blocked, 0 -> 1 is invalid
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let f = VertexSet::from_vertices(3, [1]);
        let tree = restricted_bfs(&g, 0, SearchLimits { forbidden: Some(&f), target: None });
        assert_eq!(tree.distance(1), 1.0);
        assert!(tree.distance(2).is_infinite());
    }

    #[test]
    fn bfs_agrees_with_unit_dijkstra() {
        let g = grid(9, 7);
        let limits = SearchLimits { forbidden: None, target: None };
        let a = restricted_bfs(&g, 4, limits);
        let b = unit_dijkstra(&g, 4, limits);
        for v in 0..g.vertex_count() as VertexId {
            assert_eq!(a.distance(v), b.distance(v));
            assert_eq!(a.path_to(v), b.path_to(v));
        }
    }

    #[test]
    fn oracle_equivalence_on_small_random_graphs() {
        let mut rng = CounterRng::new(11, 0);
        for _ in 0..100 {
            let n = 2 + rng.below(7) as u32;
            let mut edges: Vec<(u32, u32)> = (1..n).map(|v| (rng.below(v as u64) as u32, v)).collect();
            for _ in 0..rng.below(8) {
                let a = rng.below(n as u64) as u32;
                let b = rng.below(n as u64) as u32;
                if a != b {
                    edges.push((a.min(b), a.max(b)));
                }
            }
            edges.sort();
            edges.dedup();
            let g = Graph::from_edges(n as usize, edges).unwrap();
            let w: Vec<f64> = (0..g.edge_count()).map(|_| rng.unit() * 3.0).collect();
            let (u, v) = (rng.below(n as u64) as u32, rng.below(n as u64) as u32);
            let (bf, optimal) = brute_force(&g, &w, u, v);
            let (p, d) = weighted_geodesic_with_length(&g, &w, u, v).unwrap();
            assert!((d - bf).abs() <= 1e-9);
            assert!((path_weight(&g, &w, &p) - bf).abs() <= 1e-9);
            assert!(optimal.iter().any(|o| o.as_slice() == p.vertices()));
        }
    }

    #[test]
    fn any_geodesic_meets_detects_co_optimal_routes() {
        let g = grid(2, 2);
        let w = vec![1.0; 4];
        let two = VertexSet::from_vertices(4, [2]);
        assert!(any_geodesic_meets(&g, &w, 0, 3, &two, 1e-12).unwrap());
        let sel = weighted_geodesic(&g, &w, 0, 3).unwrap();
        assert!(!sel.vertices().contains(&2));
    }
}
