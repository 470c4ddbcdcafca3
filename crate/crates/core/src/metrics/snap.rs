//! Snapping geographic points onto graph edges.

use std::collections::BTreeMap;

use crate::geometry::{dist, point_at, project_on_segment, Point, PolylinePos};
use crate::graph::spatial::SegmentGrid;
use crate::graph::{Edge, NodeId, RoadNetwork};

/// Cuts closer than this to an edge end (meters) snap to the end node.
const END_TOL_M: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapHit {
    pub edge: usize,
    /// Arc length from the edge's `u` end, in meters.
    pub offset: f64,
    pub distance: f64,
    pub pos: PolylinePos,
}

/// Nearest-edge lookup over a fixed graph.
#[derive(Debug)]
pub struct SnapIndex<'a> {
    graph: &'a RoadNetwork,
    grid: SegmentGrid,
    /// Per edge, arc length at the start of each segment.
    starts: Vec<Vec<f64>>,
    buffer_m: f64,
}

impl<'a> SnapIndex<'a> {
    pub fn new(graph: &'a RoadNetwork, buffer_m: f64) -> Self {
        let grid = SegmentGrid::build(
            graph.edges().iter().map(|e| e.geo_path.as_slice()),
            buffer_m.max(1e-6),
        );
        let starts = graph
            .edges()
            .iter()
            .map(|e| {
                let mut acc = 0.0;
                e.geo_path
                    .windows(2)
                    .map(|w| {
                        let s = acc;
                        acc += dist(w[0], w[1]);
                        s
                    })
                    .collect()
            })
            .collect();
        SnapIndex {
            graph,
            grid,
            starts,
            buffer_m,
        }
    }

    /// Nearest point on any edge within the buffer; ties go to the lowest
    /// edge id, then the smallest offset.
    pub fn locate(&self, p: Point) -> Option<SnapHit> {
        let edges = self.graph.edges();
        let mut best: Option<SnapHit> = None;
        for (ei, si) in self.grid.near(p, self.buffer_m) {
            let path = &edges[ei].geo_path;
            let (a, b) = (path[si], path[si + 1]);
            let (d, t) = project_on_segment(p, a, b);
            if d > self.buffer_m {
                continue;
            }
            let hit = SnapHit {
                edge: ei,
                offset: self.starts[ei][si] + t * dist(a, b),
                distance: d,
                pos: PolylinePos { segment: si, t },
            };
            let better = match &best {
                None => true,
                Some(b) => (hit.distance, hit.edge)
                    .partial_cmp(&(b.distance, b.edge))
                    .is_some_and(|o| o.is_lt() || (o.is_eq() && hit.offset < b.offset)),
            };
            if better {
                best = Some(hit);
            }
        }
        best
    }
}

fn pos_key(p: PolylinePos) -> f64 {
    p.segment as f64 + p.t
}

/// Splits `path` at the cut positions (sorted, distinct keys); returns the
/// pieces between consecutive cuts, including the leading and trailing ones.
fn pieces(path: &[Point], cuts: &[PolylinePos]) -> Vec<Vec<Point>> {
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut current = vec![path[0]];
    let mut next_vertex = 1;
    for &c in cuts {
        let key = pos_key(c);
        while next_vertex < path.len() && (next_vertex as f64) < key {
            current.push(path[next_vertex]);
            next_vertex += 1;
        }
        let cut = point_at(path, c);
        if current.last() != Some(&cut) {
            current.push(cut);
        }
        out.push(std::mem::replace(&mut current, vec![cut]));
        while next_vertex < path.len() && (next_vertex as f64) <= key {
            next_vertex += 1;
        }
    }
    for &q in &path[next_vertex..] {
        if current.last() != Some(&q) {
            current.push(q);
        }
    }
    out.push(current);
    out
}

/// Inserts nodes at the given positions, splitting edges. Positions within
/// a micrometer of an edge end map to the end node; equal positions share a
/// node. New node ids are allocated from `next_node_id` in (edge, position)
/// order. Returns the new graph and the node for each input position.
pub fn split_edges_at(
    g: &RoadNetwork,
    cuts: &[(usize, PolylinePos)],
) -> (RoadNetwork, Vec<NodeId>) {
    let edges = g.edges();
    let mut per_edge: BTreeMap<usize, Vec<(PolylinePos, usize)>> = BTreeMap::new();
    let mut resolved: Vec<Option<NodeId>> = vec![None; cuts.len()];
    for (i, &(ei, pos)) in cuts.iter().enumerate() {
        let e = &edges[ei];
        let p = point_at(&e.geo_path, pos);
        let (du, dv) = (dist(p, e.geo_path[0]), dist(p, *e.geo_path.last().unwrap()));
        let at_start = pos_key(pos) == 0.0 || du <= END_TOL_M;
        let at_end = pos_key(pos) == (e.geo_path.len() - 1) as f64 || dv <= END_TOL_M;
        if at_start && (!at_end || du <= dv) {
            resolved[i] = Some(e.u);
        } else if at_end {
            resolved[i] = Some(e.v);
        } else {
            per_edge.entry(ei).or_default().push((pos, i));
        }
    }

    let mut out = RoadNetwork::new(*g.transform());
    for n in g.nodes() {
        out.insert_node(n.clone());
    }
    let mut next_id = g.next_node_id();
    let mut appended: Vec<Edge> = Vec::new();
    for (&ei, list) in per_edge.iter_mut() {
        list.sort_by(|a, b| pos_key(a.0).total_cmp(&pos_key(b.0)));
        let e = &edges[ei];
        let mut unique: Vec<PolylinePos> = Vec::new();
        let mut ids: Vec<NodeId> = Vec::new();
        for &(pos, idx) in list.iter() {
            let p = point_at(&e.geo_path, pos);
            let same = unique
                .last()
                .is_some_and(|&q| point_at(&e.geo_path, q) == p);
            if !same {
                unique.push(pos);
                out.add_node_at_geo(next_id, p);
                ids.push(next_id);
                next_id += 1;
            }
            resolved[idx] = ids.last().copied();
        }
        let chain: Vec<NodeId> = std::iter::once(e.u)
            .chain(ids.iter().copied())
            .chain([e.v])
            .collect();
        for (k, geo) in pieces(&e.geo_path, &unique).into_iter().enumerate() {
            let path = geo
                .iter()
                .map(|q| g.transform().geo_to_pixel(q[0], q[1]))
                .collect();
            appended.push(make_edge(chain[k], chain[k + 1], path, geo));
        }
    }
    for (i, e) in edges.iter().enumerate() {
        if !per_edge.contains_key(&i) {
            out.push_edge_raw(e.clone()).expect("nodes copied");
        }
    }
    for e in appended {
        out.push_edge_raw(e).expect("endpoints inserted");
    }
    (
        out,
        resolved
            .into_iter()
            .map(|r| r.expect("every cut resolved"))
            .collect(),
    )
}

fn make_edge(u: NodeId, v: NodeId, path: Vec<Point>, geo_path: Vec<Point>) -> Edge {
    Edge {
        u,
        v,
        length_px: crate::geometry::polyline_length(&path),
        length_m: crate::geometry::polyline_length(&geo_path),
        path,
        geo_path,
    }
}

/// Snaps many points at once against the original graph, then splits.
/// Unsnapped points map to `None`.
pub fn snap_points(
    g: &RoadNetwork,
    points: &[Point],
    buffer_m: f64,
) -> (RoadNetwork, Vec<Option<NodeId>>) {
    let index = SnapIndex::new(g, buffer_m);
    let hits: Vec<Option<SnapHit>> = points.iter().map(|&p| index.locate(p)).collect();
    let cuts: Vec<(usize, PolylinePos)> = hits.iter().flatten().map(|h| (h.edge, h.pos)).collect();
    let (out, ids) = split_edges_at(g, &cuts);
    let mut ids = ids.into_iter();
    let resolved = hits
        .iter()
        .map(|h| h.map(|_| ids.next().unwrap()))
        .collect();
    (out, resolved)
}

#[derive(Debug, Clone)]
pub struct Snapped {
    pub graph: RoadNetwork,
    pub edge: usize,
    pub offset: f64,
    pub node: NodeId,
}

/// Snaps `p` to the nearest edge within `buffer_m`, inserting a node there
/// unless it coincides with an edge end.
pub fn snap_point(p: Point, g: &RoadNetwork, buffer_m: f64) -> Option<Snapped> {
    let hit = SnapIndex::new(g, buffer_m).locate(p)?;
    let (graph, ids) = split_edges_at(g, &[(hit.edge, hit.pos)]);
    Some(Snapped {
        graph,
        edge: hit.edge,
        offset: hit.offset,
        node: ids[0],
    })
}

/// Adds a node at the arc-length midpoint of every edge.
pub fn inject_midpoints(g: &RoadNetwork) -> RoadNetwork {
    let cuts: Vec<(usize, PolylinePos)> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.length_m > 2.0 * END_TOL_M)
        .map(|(i, e)| {
            (
                i,
                crate::geometry::locate_offset(&e.geo_path, e.length_m / 2.0),
            )
        })
        .collect();
    split_edges_at(g, &cuts).0
}
