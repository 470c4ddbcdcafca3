use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::geometry::{polyline_length, Point};
use crate::raster::GeoTransform;

pub type NodeId = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    /// `[row, col]` in the source raster.
    pub pixel: Point,
    /// `[x, y]` in projected coordinates.
    pub geo: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    /// `[row, col]` polyline from `u` to `v`.
    pub path: Vec<Point>,
    /// `[x, y]` polyline from `u` to `v`.
    pub geo_path: Vec<Point>,
    pub length_px: f64,
    pub length_m: f64,
}

impl Edge {
    pub fn is_self_loop(&self) -> bool {
        self.u == self.v
    }

    pub fn other(&self, n: NodeId) -> NodeId {
        if self.u == n {
            self.v
        } else {
            self.u
        }
    }
}

/// Undirected spatial multigraph. Edge ids are positions in [`edges`](Self::edges).
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    nodes: BTreeMap<NodeId, Node>,
    edges: Vec<Edge>,
    transform: GeoTransform,
}

impl RoadNetwork {
    pub fn new(transform: GeoTransform) -> Self {
        RoadNetwork {
            nodes: BTreeMap::new(),
            edges: Vec::new(),
            transform,
        }
    }

    pub fn transform(&self) -> &GeoTransform {
        &self.transform
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &Node> + '_ {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn next_node_id(&self) -> NodeId {
        self.nodes.keys().next_back().map_or(0, |id| id + 1)
    }

    pub fn total_length_m(&self) -> f64 {
        self.edges.iter().map(|e| e.length_m).sum()
    }

    /// Inserts a node at a pixel location, deriving its geographic position.
    pub fn add_node_at_pixel(&mut self, id: NodeId, pixel: Point) -> NodeId {
        let geo = self.transform.pixel_to_geo(pixel[0], pixel[1]);
        self.nodes.insert(id, Node { id, pixel, geo });
        id
    }

    /// Inserts a node at a geographic location, deriving its pixel position.
    pub fn add_node_at_geo(&mut self, id: NodeId, geo: Point) -> NodeId {
        let pixel = self.transform.geo_to_pixel(geo[0], geo[1]);
        self.nodes.insert(id, Node { id, pixel, geo });
        id
    }

    pub(crate) fn insert_node(&mut self, node: Node) {
        self.nodes.insert(node.id, node);
    }

    fn check_endpoints(&self, u: NodeId, v: NodeId) -> Result<()> {
        for id in [u, v] {
            if !self.nodes.contains_key(&id) {
                return Err(Error::UnknownNode(id));
            }
        }
        Ok(())
    }

    /// Adds an edge from a pixel polyline; geography and lengths are derived.
    pub fn add_edge_pixels(&mut self, u: NodeId, v: NodeId, path: Vec<Point>) -> Result<usize> {
        self.check_endpoints(u, v)?;
        let geo_path: Vec<Point> = path
            .iter()
            .map(|p| self.transform.pixel_to_geo(p[0], p[1]))
            .collect();
        self.push_edge(u, v, path, geo_path)
    }

    /// Adds an edge from a geographic polyline; pixel path and lengths are derived.
    pub fn add_edge_geo(&mut self, u: NodeId, v: NodeId, geo_path: Vec<Point>) -> Result<usize> {
        self.check_endpoints(u, v)?;
        let path: Vec<Point> = geo_path
            .iter()
            .map(|p| self.transform.geo_to_pixel(p[0], p[1]))
            .collect();
        self.push_edge(u, v, path, geo_path)
    }

    fn push_edge(
        &mut self,
        u: NodeId,
        v: NodeId,
        path: Vec<Point>,
        geo_path: Vec<Point>,
    ) -> Result<usize> {
        if path.len() < 2 {
            return Err(Error::Data(format!("edge {u}-{v} needs at least 2 points")));
        }
        let edge = Edge {
            u,
            v,
            length_px: polyline_length(&path),
            length_m: polyline_length(&geo_path),
            path,
            geo_path,
        };
        self.edges.push(edge);
        Ok(self.edges.len() - 1)
    }

    /// Adds a fully specified edge (used by readers that carry stored lengths).
    pub(crate) fn push_edge_raw(&mut self, edge: Edge) -> Result<usize> {
        self.check_endpoints(edge.u, edge.v)?;
        self.edges.push(edge);
        Ok(self.edges.len() - 1)
    }

    /// Retains nodes satisfying `keep`; edges touching a dropped node go too.
    pub fn retain_nodes(&mut self, mut keep: impl FnMut(&Node) -> bool) {
        self.nodes.retain(|_, n| keep(n));
        let nodes = &self.nodes;
        self.edges
            .retain(|e| nodes.contains_key(&e.u) && nodes.contains_key(&e.v));
    }

    pub fn retain_edges(&mut self, mut keep: impl FnMut(usize, &Edge) -> bool) {
        let mut i = 0;
        self.edges.retain(|e| {
            let k = keep(i, e);
            i += 1;
            k
        });
    }

    /// Degree per node; a self-loop counts twice.
    pub fn degrees(&self) -> BTreeMap<NodeId, usize> {
        let mut deg: BTreeMap<NodeId, usize> = self.nodes.keys().map(|&id| (id, 0)).collect();
        for e in &self.edges {
            *deg.get_mut(&e.u).expect("edge endpoint exists") += 1;
            *deg.get_mut(&e.v).expect("edge endpoint exists") += 1;
        }
        deg
    }

    /// Sorted degree multiset.
    pub fn degree_multiset(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.degrees().into_values().collect();
        d.sort_unstable();
        d
    }

    pub fn topology(&self) -> Topology {
        Topology::new(self)
    }

    /// Node sets of connected components, each sorted, ordered by smallest id.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let topo = self.topology();
        let mut comp = vec![usize::MAX; topo.ids.len()];
        let mut out = Vec::new();
        for start in 0..topo.ids.len() {
            if comp[start] != usize::MAX {
                continue;
            }
            let cid = out.len();
            let mut members = vec![];
            let mut stack = vec![start];
            comp[start] = cid;
            while let Some(i) = stack.pop() {
                members.push(topo.ids[i]);
                for &(j, _) in &topo.adj[i] {
                    if comp[j] == usize::MAX {
                        comp[j] = cid;
                        stack.push(j);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Checks the structural invariants; used by tests and readers.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.edges.iter().enumerate() {
            let (Some(u), Some(v)) = (self.nodes.get(&e.u), self.nodes.get(&e.v)) else {
                return Err(Error::Data(format!("edge {i} references a missing node")));
            };
            if e.path.len() != e.geo_path.len() || e.path.len() < 2 {
                return Err(Error::Data(format!("edge {i} has malformed polylines")));
            }
            let close = |a: Point, b: Point, tol: f64| {
                (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol
            };
            let tol_px = 1e-6;
            let tol_geo = 1e-6 * (1.0 + u.geo[0].abs().max(u.geo[1].abs()));
            if !close(e.path[0], u.pixel, tol_px)
                || !close(*e.path.last().unwrap(), v.pixel, tol_px)
                || !close(e.geo_path[0], u.geo, tol_geo)
                || !close(*e.geo_path.last().unwrap(), v.geo, tol_geo)
            {
                return Err(Error::Data(format!(
                    "edge {i} does not start/end at its nodes"
                )));
            }
            // Allows for lengths and vertices stored with 9 significant
            // digits; pixel paths inherit the geographic rounding.
            let scale = e
                .geo_path
                .iter()
                .fold(1.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
            let rounding = 2e-8 * scale * e.geo_path.len() as f64;
            let lp = polyline_length(&e.path);
            let lm = polyline_length(&e.geo_path);
            let px_rounding = rounding / self.transform.pixel_size() + 1e-8 * e.path.len() as f64;
            if (lp - e.length_px).abs() > 1e-8 * lp.max(1.0) + px_rounding
                || (lm - e.length_m).abs() > 1e-8 * lm.max(1.0) + rounding
            {
                return Err(Error::Data(format!(
                    "edge {i} lengths disagree with its geometry"
                )));
            }
            if e.length_m == 0.0 && !e.is_self_loop() {
                return Err(Error::Data(format!("edge {i} has zero length")));
            }
        }
        Ok(())
    }
}

/// Dense adjacency view: node index <-> id, neighbor lists of `(node index, edge id)`.
#[derive(Debug, Clone)]
pub struct Topology {
    pub ids: Vec<NodeId>,
    pub index: HashMap<NodeId, usize>,
    pub adj: Vec<Vec<(usize, usize)>>,
}

impl Topology {
    pub fn new(g: &RoadNetwork) -> Self {
        let ids: Vec<NodeId> = g.node_ids().collect();
        let index: HashMap<NodeId, usize> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for (ei, e) in g.edges().iter().enumerate() {
            let (a, b) = (index[&e.u], index[&e.v]);
            adj[a].push((b, ei));
            adj[b].push((a, ei));
        }
        Topology { ids, index, adj }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths_scale_with_pixel_size() {
        let t = GeoTransform::north_up(100.0, 100.0, 0.3).unwrap();
        let mut g = RoadNetwork::new(t);
        g.add_node_at_pixel(0, [0.0, 0.0]);
        g.add_node_at_pixel(1, [3.0, 4.0]);
        g.add_edge_pixels(0, 1, vec![[0.0, 0.0], [0.0, 4.0], [3.0, 4.0]])
            .unwrap();
        let e = &g.edges()[0];
        assert_eq!(e.length_px, 7.0);
        assert!((e.length_m - 7.0 * 0.3).abs() < 1e-9);
        g.validate().unwrap();
        assert!(g
            .add_edge_pixels(0, 9, vec![[0.0, 0.0], [1.0, 1.0]])
            .is_err());
    }

    #[test]
    fn degrees_count_self_loops_twice() {
        let mut g = RoadNetwork::new(GeoTransform::identity());
        g.add_node_at_pixel(0, [0.0, 0.0]);
        g.add_edge_pixels(0, 0, vec![[0.0, 0.0], [0.0, 2.0], [2.0, 0.0], [0.0, 0.0]])
            .unwrap();
        assert_eq!(g.degrees()[&0], 2);
        g.validate().unwrap();
    }
}
