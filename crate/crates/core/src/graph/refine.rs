//! Graph clean-up rules: spur pruning, gap closing and small-component removal.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::spatial::PointGrid;
use super::{NodeId, RoadNetwork};
use crate::error::{Error, Result};
use crate::geometry::dist;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineParams {
    /// Components whose total length is below this are dropped (meters).
    pub min_subgraph_m: f64,
    /// Dead-end edges shorter than this are pruned (pixels).
    pub max_spur_px: f64,
    /// Terminals closer than this to another node get connected (pixels).
    pub max_gap_px: f64,
}

impl Default for RefineParams {
    fn default() -> Self {
        RefineParams {
            min_subgraph_m: 80.0,
            max_spur_px: 10.0,
            max_gap_px: 20.0,
        }
    }
}

impl RefineParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("min_subgraph_m", self.min_subgraph_m),
            ("max_spur_px", self.max_spur_px),
            ("max_gap_px", self.max_gap_px),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineStep {
    PruneSpurs,
    ConnectTerminals,
    RemoveSmallSubgraphs,
}

pub const DEFAULT_REFINE_ORDER: [RefineStep; 3] = [
    RefineStep::PruneSpurs,
    RefineStep::ConnectTerminals,
    RefineStep::RemoveSmallSubgraphs,
];

/// Drops every connected component whose summed edge length is below
/// `min_subgraph_m`. Surviving nodes and edges are untouched.
pub fn remove_small_subgraphs(g: &RoadNetwork, min_subgraph_m: f64) -> RoadNetwork {
    let topo = g.topology();
    let mut comp = vec![usize::MAX; topo.ids.len()];
    let mut totals = Vec::new();
    for start in 0..topo.ids.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let cid = totals.len();
        comp[start] = cid;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for &(j, _) in &topo.adj[i] {
                if comp[j] == usize::MAX {
                    comp[j] = cid;
                    stack.push(j);
                }
            }
        }
        totals.push(0.0f64);
    }
    for e in g.edges() {
        totals[comp[topo.index[&e.u]]] += e.length_m;
    }
    let mut out = g.clone();
    out.retain_nodes(|n| totals[comp[topo.index[&n.id]]] >= min_subgraph_m);
    out
}

/// Repeatedly removes degree-1 nodes whose only edge is shorter than
/// `max_spur_px`, together with that edge, until nothing changes.
pub fn prune_short_spurs(g: &RoadNetwork, max_spur_px: f64) -> RoadNetwork {
    let mut out = g.clone();
    loop {
        let degrees = out.degrees();
        let mut incident: HashMap<NodeId, usize> = HashMap::new();
        for (i, e) in out.edges().iter().enumerate() {
            for n in [e.u, e.v] {
                if degrees[&n] == 1 {
                    incident.insert(n, i);
                }
            }
        }
        let mut drop_nodes = HashSet::new();
        let mut drop_edges = HashSet::new();
        for (&n, &ei) in &incident {
            if out.edges()[ei].length_px < max_spur_px {
                drop_nodes.insert(n);
                drop_edges.insert(ei);
            }
        }
        if drop_nodes.is_empty() {
            return out;
        }
        out.retain_edges(|i, _| !drop_edges.contains(&i));
        out.retain_nodes(|n| !drop_nodes.contains(&n.id));
    }
}

/// One pass: each terminal (ascending id) is joined by a straight edge to the
/// nearest node it is not already adjacent to, when closer than `max_gap_px`
/// in pixel distance. Nearest-node ties go to the lowest id, and a terminal
/// gains at most one edge.
pub fn connect_terminals(g: &RoadNetwork, max_gap_px: f64) -> RoadNetwork {
    let mut out = g.clone();
    let degrees = g.degrees();
    let terminals: Vec<NodeId> = degrees
        .iter()
        .filter(|(_, &d)| d == 1)
        .map(|(&n, _)| n)
        .collect();
    if terminals.is_empty() {
        return out;
    }
    let mut index = PointGrid::new(max_gap_px.max(1e-9));
    for n in g.nodes() {
        index.insert(n.pixel, n.id);
    }
    let mut adjacent: HashSet<(NodeId, NodeId)> = g
        .edges()
        .iter()
        .map(|e| (e.u.min(e.v), e.u.max(e.v)))
        .collect();
    let is_terminal: HashSet<NodeId> = terminals.iter().copied().collect();
    let mut gained: HashSet<NodeId> = HashSet::new();
    for &t in &terminals {
        if gained.contains(&t) {
            continue;
        }
        let tp = g.node(t).expect("terminal exists").pixel;
        let best = index
            .near(tp, max_gap_px)
            .filter(|&(_, n)| {
                n != t
                    && !adjacent.contains(&(t.min(n), t.max(n)))
                    && !(is_terminal.contains(&n) && gained.contains(&n))
            })
            .map(|(p, n)| (dist(tp, p), n))
            .filter(|&(d, _)| d < max_gap_px)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((_, n)) = best {
            let np = g.node(n).expect("candidate exists").pixel;
            out.add_edge_pixels(t, n, vec![tp, np])
                .expect("endpoints exist");
            adjacent.insert((t.min(n), t.max(n)));
            gained.insert(t);
            gained.insert(n);
        }
    }
    out
}

pub fn refine(g: &RoadNetwork, p: &RefineParams) -> Result<RoadNetwork> {
    refine_with_order(g, p, &DEFAULT_REFINE_ORDER)
}

/// Applies the refinement rules in the given order.
pub fn refine_with_order(
    g: &RoadNetwork,
    p: &RefineParams,
    order: &[RefineStep],
) -> Result<RoadNetwork> {
    p.validate()?;
    let mut out = g.clone();
    for step in order {
        out = match step {
            RefineStep::PruneSpurs => prune_short_spurs(&out, p.max_spur_px),
            RefineStep::ConnectTerminals => connect_terminals(&out, p.max_gap_px),
            RefineStep::RemoveSmallSubgraphs => remove_small_subgraphs(&out, p.min_subgraph_m),
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::GeoTransform;

    /// 1 m pixels so pixel and metric lengths coincide.
    fn net() -> RoadNetwork {
        RoadNetwork::new(GeoTransform::north_up(0.0, 0.0, 1.0).unwrap())
    }

    fn line(g: &mut RoadNetwork, a: NodeId, b: NodeId) {
        let (pa, pb) = (g.node(a).unwrap().pixel, g.node(b).unwrap().pixel);
        g.add_edge_pixels(a, b, vec![pa, pb]).unwrap();
    }

    #[test]
    fn subgraph_threshold_is_strict() {
        let mut g = net();
        g.add_node_at_pixel(0, [0.0, 0.0]);
        g.add_node_at_pixel(1, [0.0, 50.0]);
        g.add_node_at_pixel(2, [100.0, 0.0]);
        g.add_node_at_pixel(3, [100.0, 80.0]);
        line(&mut g, 0, 1);
        line(&mut g, 2, 3);
        let out = remove_small_subgraphs(&g, 80.0);
        assert_eq!(out.node_ids().collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(out.edges(), &g.edges()[1..]);
    }

    #[test]
    fn components_30_and_120() {
        let mut g = net();
        for (i, p) in [
            [0.0, 0.0],
            [0.0, 30.0],
            [50.0, 0.0],
            [50.0, 60.0],
            [50.0, 120.0],
        ]
        .iter()
        .enumerate()
        {
            g.add_node_at_pixel(i as NodeId, *p);
        }
        line(&mut g, 0, 1);
        line(&mut g, 2, 3);
        line(&mut g, 3, 4);
        let out = remove_small_subgraphs(&g, 80.0);
        assert_eq!(out.node_count(), 3);
        assert!((out.total_length_m() - 120.0).abs() < 1e-9);
    }

    fn star_with_spur(spur_len: f64) -> RoadNetwork {
        // Long arms keep the hub at degree >= 3 after pruning.
        let mut g = net();
        g.add_node_at_pixel(0, [100.0, 100.0]);
        g.add_node_at_pixel(1, [100.0, 0.0]);
        g.add_node_at_pixel(2, [100.0, 200.0]);
        g.add_node_at_pixel(3, [100.0 + spur_len, 100.0]);
        line(&mut g, 0, 1);
        line(&mut g, 0, 2);
        line(&mut g, 0, 3);
        g
    }

    #[test]
    fn spur_threshold_is_strict() {
        assert_eq!(
            prune_short_spurs(&star_with_spur(8.0), 10.0).node_count(),
            3
        );
        assert_eq!(
            prune_short_spurs(&star_with_spur(10.0), 10.0).node_count(),
            4
        );
    }

    #[test]
    fn spur_chain_pruned_iteratively() {
        let mut g = star_with_spur(6.0);
        g.add_node_at_pixel(4, [112.0, 100.0]);
        line(&mut g, 3, 4);
        let out = prune_short_spurs(&g, 10.0);
        assert_eq!(out.node_ids().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(out.edge_count(), 2);
    }

    fn gap_fixture(gap: f64) -> RoadNetwork {
        let mut g = net();
        g.add_node_at_pixel(0, [0.0, 0.0]);
        g.add_node_at_pixel(1, [0.0, 100.0]);
        g.add_node_at_pixel(2, [0.0, 100.0 + gap]);
        g.add_node_at_pixel(3, [0.0, 300.0]);
        line(&mut g, 0, 1);
        line(&mut g, 2, 3);
        g
    }

    #[test]
    fn gap_threshold_is_strict() {
        assert_eq!(connect_terminals(&gap_fixture(15.0), 20.0).edge_count(), 3);
        assert_eq!(connect_terminals(&gap_fixture(20.0), 20.0).edge_count(), 2);
    }

    #[test]
    fn mutual_terminals_connect_once() {
        let mut g = net();
        g.add_node_at_pixel(0, [0.0, 0.0]);
        g.add_node_at_pixel(1, [0.0, 10.0]);
        g.add_node_at_pixel(2, [0.0, 200.0]);
        line(&mut g, 0, 2);
        g.add_node_at_pixel(3, [0.0, -200.0]);
        line(&mut g, 1, 3);
        // 0 and 1 are mutual nearest terminals 10 px apart.
        let out = connect_terminals(&g, 20.0);
        assert_eq!(out.edge_count(), 3);
        let added = &out.edges()[2];
        assert_eq!((added.u, added.v), (0, 1));
        assert_eq!(added.path.len(), 2);
    }

    #[test]
    fn nearest_tie_goes_to_lowest_id() {
        let mut g = net();
        g.add_node_at_pixel(0, [0.0, 0.0]);
        g.add_node_at_pixel(1, [0.0, -50.0]);
        line(&mut g, 0, 1);
        g.add_node_at_pixel(7, [5.0, 5.0]);
        g.add_node_at_pixel(3, [-5.0, 5.0]);
        let out = connect_terminals(&g, 20.0);
        assert_eq!(out.edges().last().map(|e| (e.u, e.v)), Some((0, 3)));
    }

    #[test]
    fn refine_composes_rules() {
        let mut g = star_with_spur(8.0);
        // A long arm continuing across a 15 px gap.
        g.add_node_at_pixel(10, [100.0, 215.0]);
        g.add_node_at_pixel(11, [100.0, 400.0]);
        line(&mut g, 10, 11);
        // A 50 m orphan.
        g.add_node_at_pixel(20, [500.0, 500.0]);
        g.add_node_at_pixel(21, [500.0, 550.0]);
        line(&mut g, 20, 21);
        let out = refine(&g, &RefineParams::default()).unwrap();
        assert!(out.node(3).is_none(), "spur kept");
        assert!(
            out.node(20).is_none() && out.node(21).is_none(),
            "orphan kept"
        );
        assert!(
            out.edges().iter().any(|e| (e.u, e.v) == (2, 10)),
            "gap not bridged"
        );
        assert_eq!(out.components().len(), 1);
        out.validate().unwrap();
    }

    #[test]
    fn refine_empty() {
        let out = refine(&net(), &RefineParams::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn default_params() {
        let p = RefineParams::default();
        assert_eq!(
            (p.min_subgraph_m, p.max_spur_px, p.max_gap_px),
            (80.0, 10.0, 20.0)
        );
    }
}
