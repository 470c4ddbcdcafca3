//! Shortest paths over edge length in meters.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dist, Point};
use crate::graph::{NodeId, RoadNetwork, Topology};

#[derive(Debug, Clone, Copy, PartialEq)]
struct State {
    dist: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, then on node index.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra over `length_m`. `sources` are `(node index, initial
/// distance)`; nodes farther than `bound` stay at infinity.
pub fn dijkstra(
    g: &RoadNetwork,
    topo: &Topology,
    sources: &[(usize, f64)],
    bound: f64,
) -> Vec<f64> {
    let edges = g.edges();
    let mut best = vec![f64::INFINITY; topo.ids.len()];
    let mut heap = BinaryHeap::new();
    for &(node, d) in sources {
        if d <= bound && d < best[node] {
            best[node] = d;
            heap.push(State { dist: d, node });
        }
    }
    while let Some(State { dist, node }) = heap.pop() {
        if dist > best[node] {
            continue;
        }
        for &(next, e) in &topo.adj[node] {
            let nd = dist + edges[e].length_m;
            if nd <= bound && nd < best[next] {
                best[next] = nd;
                heap.push(State {
                    dist: nd,
                    node: next,
                });
            }
        }
    }
    best
}

/// Node closest to `p`; ties go to the lowest id.
pub fn nearest_node(g: &RoadNetwork, p: Point) -> Result<NodeId> {
    let mut best: Option<(f64, NodeId)> = None;
    for n in g.nodes() {
        let d = dist(n.geo, p);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, n.id));
        }
    }
    best.map(|(_, id)| id)
        .ok_or_else(|| Error::Data("graph has no nodes".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Route {
    pub node_sequence: Vec<NodeId>,
    pub geometry: Vec<Point>,
    pub total_length_m: f64,
}

/// Shortest route by length; among equal-length routes the lexicographically
/// smallest node sequence wins. `src == dst` gives a single-node route of
/// length 0.
pub fn shortest_route(g: &RoadNetwork, src: NodeId, dst: NodeId) -> Result<Route> {
    for id in [src, dst] {
        if g.node(id).is_none() {
            return Err(Error::UnknownNode(id));
        }
    }
    if src == dst {
        return Ok(Route {
            node_sequence: vec![src],
            geometry: vec![g.node(src).unwrap().geo],
            total_length_m: 0.0,
        });
    }
    let topo = g.topology();
    let (s, t) = (topo.index[&src], topo.index[&dst]);
    let to_dst = dijkstra(g, &topo, &[(t, 0.0)], f64::INFINITY);
    let total = to_dst[s];
    if !total.is_finite() {
        return Err(Error::Unreachable { from: src, to: dst });
    }
    let tol = 1e-9 * total.max(1.0);
    let edges = g.edges();
    let mut seq = vec![src];
    let mut geometry = vec![g.node(src).unwrap().geo];
    let mut length = 0.0;
    let mut visited = vec![false; topo.ids.len()];
    let mut cur = s;
    visited[s] = true;
    while cur != t {
        // Smallest-id neighbor that stays on a shortest path; for parallel
        // edges the shortest one carries the geometry.
        let mut pick: Option<(NodeId, f64, usize)> = None;
        for &(next, e) in &topo.adj[cur] {
            let w = edges[e].length_m;
            if next == cur || visited[next] || (w + to_dst[next] - to_dst[cur]).abs() > tol {
                continue;
            }
            let cand = (topo.ids[next], w, e);
            let better = match pick {
                None => true,
                Some((id, pw, pe)) => (cand.0, w, e) < (id, pw, pe),
            };
            if better {
                pick = Some(cand);
            }
        }
        let (id, w, e) =
            pick.ok_or_else(|| Error::Internal("shortest-path walk stalled".into()))?;
        let edge = &edges[e];
        let forward = edge.u == topo.ids[cur];
        let pts: Box<dyn Iterator<Item = &Point>> = if forward {
            Box::new(edge.geo_path.iter())
        } else {
            Box::new(edge.geo_path.iter().rev())
        };
        geometry.extend(pts.skip(1));
        length += w;
        cur = topo.index[&id];
        visited[cur] = true;
        seq.push(id);
    }
    Ok(Route {
        node_sequence: seq,
        geometry,
        total_length_m: length,
    })
}
