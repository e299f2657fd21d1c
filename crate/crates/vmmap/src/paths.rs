//! Precomputed fixed routing: the shortest k→p path for every ordered server
//! pair, plus the reverse index from each edge to the pairs routed over it.
//!
//! All traffic between two servers is assumed to follow one fixed shortest
//! path, so the table is computed once per network and shared read-only by
//! every formulation builder and solver.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::{ModelError, PhysicalNetwork};

/// Edge metric used by the shortest-path computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeWeightRule {
    /// Every edge weighs 1 (hop count) — the default.
    Hop,
    /// Edge weight 1/B_e, preferring high-bandwidth links.
    InverseBandwidth,
}

impl EdgeWeightRule {
    fn weight(&self, bandwidth: f64) -> f64 {
        match self {
            EdgeWeightRule::Hop => 1.0,
            EdgeWeightRule::InverseBandwidth => {
                if bandwidth > 0.0 {
                    1.0 / bandwidth
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// The fixed path P_kp for every ordered pair of distinct servers, and the
/// inverse map from edges to the ordered pairs routed across them.
#[derive(Debug, Clone)]
pub struct PathTable {
    n: usize,
    /// `paths[k][p]` lists edge ids along the walk from k to p; empty for k=p.
    paths: Vec<Vec<Vec<usize>>>,
    /// `weights[k][p]` is the total metric weight of that path.
    weights: Vec<Vec<f64>>,
    /// `on_path[e]` lists every ordered pair (k, p) with e ∈ P_kp.
    on_path: Vec<Vec<(usize, usize)>>,
}

impl PathTable {
    pub fn num_servers(&self) -> usize {
        self.n
    }

    /// Edge ids of the fixed k→p path. Only defined for k ≠ p; the diagonal
    /// is not stored and yields an empty slice.
    pub fn path(&self, k: usize, p: usize) -> &[usize] {
        debug_assert_ne!(k, p, "paths are stored only for distinct pairs");
        &self.paths[k][p]
    }

    /// Total metric weight of the fixed k→p path.
    pub fn weight(&self, k: usize, p: usize) -> f64 {
        self.weights[k][p]
    }

    /// Ordered pairs (k, p) whose fixed path crosses edge `e`.
    pub fn pairs_on_edge(&self, e: usize) -> &[(usize, usize)] {
        &self.on_path[e]
    }

    /// True when edge `e` lies on the fixed k→p path.
    pub fn edge_on_path(&self, e: usize, k: usize, p: usize) -> bool {
        self.paths[k][p].contains(&e)
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the max-heap pops the smallest distance; ties by the
        // smaller node id for determinism.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Builds the complete path table for a connected network.
///
/// For every unordered pair {k, p} (k < p) the path is the weight-minimal
/// k→p walk whose node sequence is lexicographically smallest among all
/// minimal walks; the p→k entry reuses the same edges in reverse order, so
/// both orientations always traverse the same edge set.
pub fn build_path_table(
    net: &PhysicalNetwork,
    rule: EdgeWeightRule,
) -> Result<PathTable, ModelError> {
    let n = net.num_servers();
    // adjacency: node -> (neighbor, edge id, weight), sorted by neighbor id
    let mut adj: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n];
    for e in &net.edges {
        let w = rule.weight(e.bandwidth);
        adj[e.a].push((e.b, e.id, w));
        adj[e.b].push((e.a, e.id, w));
    }
    for row in &mut adj {
        row.sort_by_key(|&(v, _, _)| v);
    }

    // Single-source distances for every node (the graphs here are small; an
    // all-pairs Dijkstra sweep is cheap and keeps the code uniform).
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    for (s, dist_row) in dist.iter_mut().enumerate() {
        dijkstra(&adj, s, dist_row);
        if dist_row.iter().any(|d| !d.is_finite()) {
            return Err(ModelError::Disconnected);
        }
    }

    let mut paths = vec![vec![Vec::new(); n]; n];
    let mut weights = vec![vec![0.0; n]; n];
    for k in 0..n {
        for p in (k + 1)..n {
            // Greedy forward walk from k guided by distances to p: at each
            // node take the smallest-id neighbor that stays on a shortest
            // path. This realizes the lexicographically smallest minimal
            // node sequence.
            let mut edge_seq = Vec::new();
            let mut u = k;
            while u != p {
                let mut chosen: Option<(usize, usize)> = None;
                for &(v, e, w) in &adj[u] {
                    if on_shortest(dist[u][p], w, dist[v][p]) {
                        chosen = Some((v, e));
                        break; // adjacency is sorted by neighbor id
                    }
                }
                let (v, e) = chosen.expect("connected graph always has a descent neighbor");
                edge_seq.push(e);
                u = v;
            }
            weights[k][p] = dist[k][p];
            weights[p][k] = dist[k][p];
            let mut rev = edge_seq.clone();
            rev.reverse();
            paths[k][p] = edge_seq;
            paths[p][k] = rev;
        }
    }

    let mut on_path = vec![Vec::new(); net.num_edges()];
    for k in 0..n {
        for p in 0..n {
            if k == p {
                continue;
            }
            for &e in &paths[k][p] {
                on_path[e].push((k, p));
            }
        }
    }

    Ok(PathTable { n, paths, weights, on_path })
}

/// True when stepping over an edge of weight `w` from a node at distance
/// `d_here` (to the target) lands on a node at distance `d_next` that stays
/// on some shortest path, i.e. d_here = w + d_next up to round-off.
fn on_shortest(d_here: f64, w: f64, d_next: f64) -> bool {
    (d_here - (w + d_next)).abs() <= 1e-9 * (1.0 + d_here.abs())
}

fn dijkstra(adj: &[Vec<(usize, usize, f64)>], source: usize, dist: &mut [f64]) {
    dist.fill(f64::INFINITY);
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem { dist: 0.0, node: source });
    while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, _, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapItem { dist: nd, node: v });
            }
        }
    }
}
