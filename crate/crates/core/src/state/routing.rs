//! All-pairs shortest paths by propagation delay.
//!
//! Among equal-delay paths the lexicographically smallest node sequence wins.
//! Paths are computed once per topology and shared by every state.

use crate::model::{NodeId, Topology};

/// Relative slack used when comparing summed delays.
const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTable {
    n: usize,
    dist: Vec<f64>,
    paths: Vec<Vec<NodeId>>,
}

fn tight(lhs: f64, rhs: f64) -> bool {
    (lhs - rhs).abs() <= TIE_EPS * rhs.abs().max(1.0)
}

impl RoutingTable {
    /// Builds the table from a sorted adjacency list. Unreachable pairs keep
    /// an infinite distance and an empty path.
    pub(crate) fn build(adjacency: &[Vec<(NodeId, f64)>]) -> Self {
        let n = adjacency.len();
        let mut dist = vec![f64::INFINITY; n * n];
        for i in 0..n {
            dist[i * n + i] = 0.0;
            for &(j, d) in &adjacency[i] {
                if d < dist[i * n + j] {
                    dist[i * n + j] = d;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                let dik = dist[i * n + k];
                if !dik.is_finite() {
                    continue;
                }
                for j in 0..n {
                    let cand = dik + dist[k * n + j];
                    if cand < dist[i * n + j] {
                        dist[i * n + j] = cand;
                    }
                }
            }
        }

        let mut paths = vec![Vec::new(); n * n];
        for src in 0..n {
            for dst in 0..n {
                if dist[src * n + dst].is_finite() {
                    paths[src * n + dst] = lexicographic_path(adjacency, &dist, n, src, dst);
                }
            }
        }
        Self { n, dist, paths }
    }

    pub fn delay(&self, from: NodeId, to: NodeId) -> f64 {
        self.dist[from * self.n + to]
    }

    pub fn path(&self, from: NodeId, to: NodeId) -> &[NodeId] {
        &self.paths[from * self.n + to]
    }

    pub fn is_connected(&self) -> bool {
        self.dist.iter().all(|d| d.is_finite())
    }
}

/// Depth-first search over "tight" edges (those lying on some shortest path
/// to `dst`), visiting neighbours in ascending order. The first simple path
/// found is the lexicographically smallest shortest path.
fn lexicographic_path(
    adjacency: &[Vec<(NodeId, f64)>],
    dist: &[f64],
    n: usize,
    src: NodeId,
    dst: NodeId,
) -> Vec<NodeId> {
    let to_dst = |u: NodeId| dist[u * n + dst];
    let mut path = vec![src];
    let mut on_path = vec![false; n];
    on_path[src] = true;
    // cursor[k] = next adjacency index to try from path[k]
    let mut cursor = vec![0usize];
    while let Some(&u) = path.last() {
        if u == dst {
            return path;
        }
        let depth = path.len() - 1;
        let mut advanced = false;
        while cursor[depth] < adjacency[u].len() {
            let (v, d) = adjacency[u][cursor[depth]];
            cursor[depth] += 1;
            if !on_path[v] && tight(d + to_dst(v), to_dst(u)) {
                path.push(v);
                on_path[v] = true;
                cursor.push(0);
                advanced = true;
                break;
            }
        }
        if !advanced {
            on_path[u] = false;
            path.pop();
            cursor.pop();
        }
    }
    unreachable!("a tight path exists whenever the distance is finite")
}

/// Shortest path between two nodes of a topology, `[i]` when `i == j`.
pub fn shortest_path(topology: &Topology, from: NodeId, to: NodeId) -> Vec<NodeId> {
    topology.routes().path(from, to).to_vec()
}

/// Sum of link delays along a node path.
pub fn path_delay(topology: &Topology, path: &[NodeId]) -> f64 {
    path.windows(2)
        .map(|w| topology.link_delay(w[0], w[1]).unwrap_or(f64::INFINITY))
        .sum()
}
