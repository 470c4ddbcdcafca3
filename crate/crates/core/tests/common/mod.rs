#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use roadgraph_core::metrics::rng::XorShift64Star;
use roadgraph_core::{GeoTransform, NodeId, RoadNetwork};

pub type Point = [f64; 2];

/// Small connected graph on a jittered 3x3 lattice with bent edges, and a
/// proposal keeping a random subset of its edges with different bends.
pub struct LatticePair {
    pub gt: RoadNetwork,
    pub prop: RoadNetwork,
}

fn bent(a: Point, b: Point, bend: f64) -> Vec<Point> {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = (dx * dx + dy * dy).sqrt();
    let mid = [
        (a[0] + b[0]) / 2.0 - dy / len * bend,
        (a[1] + b[1]) / 2.0 + dx / len * bend,
    ];
    vec![a, mid, b]
}

pub fn lattice_pair(seed: u64, max_nodes: usize) -> LatticePair {
    let mut rng = XorShift64Star::new(seed);
    let n = 2 + rng.below(max_nodes as u64 - 1) as usize;
    let cell = |i: usize| (i / 3, i % 3);
    let adjacent = |a: usize, b: usize| {
        let ((ra, ca), (rb, cb)) = (cell(a), cell(b));
        ra.abs_diff(rb) + ca.abs_diff(cb) == 1
    };

    // Grow a connected cell set, recording the tree edge that reached each cell.
    let mut chosen = vec![rng.below(9) as usize];
    let mut tree = Vec::new();
    while chosen.len() < n {
        let frontier: Vec<(usize, usize)> = chosen
            .iter()
            .flat_map(|&a| (0..9).filter(move |&b| adjacent(a, b)).map(move |b| (a, b)))
            .filter(|(_, b)| !chosen.contains(b))
            .collect();
        let (a, b) = frontier[rng.below(frontier.len() as u64) as usize];
        chosen.push(b);
        tree.push((a, b));
    }
    let mut edges: BTreeSet<(usize, usize)> =
        tree.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    for &a in &chosen {
        for &b in &chosen {
            if a < b && adjacent(a, b) && rng.unit() < 0.5 {
                edges.insert((a, b));
            }
        }
    }

    let pos: BTreeMap<usize, Point> = chosen
        .iter()
        .map(|&i| {
            let (r, c) = cell(i);
            let j = |rng: &mut XorShift64Star| (rng.unit() - 0.5) * 20.0;
            (
                i,
                [
                    c as f64 * 100.0 + j(&mut rng),
                    r as f64 * 100.0 + j(&mut rng),
                ],
            )
        })
        .collect();
    let mut gt = RoadNetwork::new(GeoTransform::identity());
    for (&i, &p) in &pos {
        gt.add_node_at_geo(i as NodeId, p);
    }
    let mut prop = RoadNetwork::new(GeoTransform::identity());
    for &(a, b) in &edges {
        let gt_bend = (rng.unit() - 0.5) * 30.0;
        gt.add_edge_geo(a as NodeId, b as NodeId, bent(pos[&a], pos[&b], gt_bend))
            .unwrap();
        if rng.unit() < 0.7 {
            let (u, v) = if rng.unit() < 0.5 { (a, b) } else { (b, a) };
            for k in [u, v] {
                if prop.node(k as NodeId).is_none() {
                    prop.add_node_at_geo(k as NodeId, pos[&k]);
                }
            }
            let bend = (rng.unit() - 0.5) * 30.0;
            prop.add_edge_geo(u as NodeId, v as NodeId, bent(pos[&u], pos[&v], bend))
                .unwrap();
        }
    }
    LatticePair { gt, prop }
}

/// All-pairs shortest path lengths over `length_m`.
pub fn floyd_warshall(g: &RoadNetwork) -> (Vec<NodeId>, Vec<Vec<f64>>) {
    let ids: Vec<NodeId> = g.node_ids().collect();
    let n = ids.len();
    let at = |id: NodeId| ids.iter().position(|&x| x == id).unwrap();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in g.edges() {
        let (a, b) = (at(e.u), at(e.v));
        if e.length_m < d[a][b] {
            d[a][b] = e.length_m;
            d[b][a] = e.length_m;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    (ids, d)
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0)
    };
    let (x, y) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    (x * x + y * y).sqrt()
}

pub fn distance_to_graph(p: Point, g: &RoadNetwork) -> f64 {
    g.edges()
        .iter()
        .flat_map(|e| {
            e.geo_path
                .windows(2)
                .map(move |w| point_segment_distance(p, w[0], w[1]))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Graph with every edge kept independently with probability `1 - drop`;
/// nodes left without edges are removed.
pub fn delete_edges(g: &RoadNetwork, drop: f64, seed: u64) -> RoadNetwork {
    let mut rng = XorShift64Star::new(seed);
    let keep: Vec<bool> = g.edges().iter().map(|_| rng.unit() >= drop).collect();
    let mut out = g.clone();
    out.retain_edges(|i, _| keep[i]);
    let used: BTreeSet<NodeId> = out.edges().iter().flat_map(|e| [e.u, e.v]).collect();
    out.retain_nodes(|n| used.contains(&n.id));
    out
}
