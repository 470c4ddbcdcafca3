//! Average path length similarity between a ground-truth and a proposal graph.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::XorShift64Star;
use super::snap::{inject_midpoints, snap_points};
use super::Sum;
use crate::error::{Error, Result};
use crate::graph::{NodeId, RoadNetwork};
use crate::routing::dijkstra;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AplsParams {
    pub n_control: usize,
    pub snap_buffer_m: f64,
    pub inject_midpoints: bool,
    pub rng_seed: u64,
    pub symmetric: bool,
}

impl Default for AplsParams {
    fn default() -> Self {
        AplsParams {
            n_control: 500,
            snap_buffer_m: 4.0,
            inject_midpoints: false,
            rng_seed: 42,
            symmetric: true,
        }
    }
}

impl AplsParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_control < 2 {
            return Err(Error::param("n_control", "must be at least 2"));
        }
        if !(self.snap_buffer_m > 0.0 && self.snap_buffer_m.is_finite()) {
            return Err(Error::param("snap_buffer_m", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AplsReport {
    pub score: f64,
    pub score_gt_to_prop: f64,
    /// `None` for the one-directional variant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score_prop_to_gt: Option<f64>,
    pub n_pairs_evaluated: usize,
    pub n_nodes_unsnapped: usize,
}

/// Score of one control pair: `1 - min(1, |L_gt - L_prop| / L_gt)`, or 0 when
/// the proposal has no path (`None`).
pub fn pair_score(l_gt: f64, l_prop: Option<f64>) -> f64 {
    1.0 - pair_cost(l_gt, l_prop)
}

fn pair_cost(l_gt: f64, l_prop: Option<f64>) -> f64 {
    match l_prop {
        Some(lp) if lp.is_finite() => {
            if l_gt > 0.0 {
                ((l_gt - lp).abs() / l_gt).min(1.0)
            } else if lp == 0.0 {
                0.0
            } else {
                1.0
            }
        }
        _ => 1.0,
    }
}

/// `min(n, |nodes|)` distinct node ids, uniformly without replacement.
pub fn sample_control_nodes(g: &RoadNetwork, n: usize, seed: u64) -> Result<Vec<NodeId>> {
    if n < 2 {
        return Err(Error::param("n_control", "must be at least 2"));
    }
    if g.node_count() < 2 {
        return Err(Error::MetricUndefined(format!(
            "need at least 2 nodes to sample control nodes, graph has {}",
            g.node_count()
        )));
    }
    let ids: Vec<NodeId> = g.node_ids().collect();
    let mut rng = XorShift64Star::new(seed);
    Ok(rng
        .sample_indices(ids.len(), n)
        .into_iter()
        .map(|i| ids[i])
        .collect())
}

#[derive(Debug, Clone, Copy)]
struct Directional {
    score: f64,
    pairs: usize,
    unsnapped: usize,
}

/// Shortest-path lengths between all control nodes; `None` rows for
/// controls absent from the graph.
fn control_distances(g: &RoadNetwork, controls: &[Option<NodeId>]) -> Vec<Option<Vec<f64>>> {
    let topo = g.topology();
    let cols: Vec<Option<usize>> = controls
        .iter()
        .map(|c| c.map(|id| topo.index[&id]))
        .collect();
    controls
        .par_iter()
        .map(|c| {
            let src = topo.index[&(*c)?];
            let d = dijkstra(g, &topo, &[(src, 0.0)], f64::INFINITY);
            Some(
                cols.iter()
                    .map(|j| j.map_or(f64::INFINITY, |j| d[j]))
                    .collect(),
            )
        })
        .collect()
}

/// One direction: controls sampled on `src`, snapped into `dst`. `None` when
/// `src` has fewer than two nodes or no connected control pair.
fn directional(
    src: &RoadNetwork,
    dst: &RoadNetwork,
    p: &AplsParams,
) -> Result<Option<Directional>> {
    let src = if p.inject_midpoints {
        inject_midpoints(src)
    } else {
        src.clone()
    };
    if src.node_count() < 2 {
        return Ok(None);
    }
    let controls = sample_control_nodes(&src, p.n_control, p.rng_seed)?;
    let src_d = control_distances(&src, &controls.iter().map(|&c| Some(c)).collect::<Vec<_>>());
    let points: Vec<_> = controls.iter().map(|&c| src.node(c).unwrap().geo).collect();
    let (snapped_graph, snapped) = snap_points(dst, &points, p.snap_buffer_m);
    let dst_d = control_distances(&snapped_graph, &snapped);

    let k = controls.len();
    let rows: Vec<(Sum, usize)> = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut sum = Sum::default();
            let mut pairs = 0;
            let gt_row = src_d[i].as_ref().unwrap();
            for j in i + 1..k {
                let l_gt = gt_row[j];
                if !l_gt.is_finite() {
                    continue;
                }
                let l_prop = dst_d[i].as_ref().map(|row| row[j]);
                sum.add(pair_cost(l_gt, l_prop));
                pairs += 1;
            }
            (sum, pairs)
        })
        .collect();
    let mut total = Sum::default();
    let mut pairs = 0;
    for (s, n) in rows {
        total.merge(s);
        pairs += n;
    }
    if pairs == 0 {
        return Ok(None);
    }
    Ok(Some(Directional {
        score: 1.0 - total.value() / pairs as f64,
        pairs,
        unsnapped: snapped.iter().filter(|s| s.is_none()).count(),
    }))
}

/// APLS of `prop` against `gt`. Node counts are taken after optional midpoint
/// injection. An undefined reverse direction (proposal with fewer than two
/// nodes or no connected pair) scores 0.
pub fn apls(gt: &RoadNetwork, prop: &RoadNetwork, p: &AplsParams) -> Result<AplsReport> {
    p.validate()?;
    let n_gt = if p.inject_midpoints {
        inject_midpoints(gt).node_count()
    } else {
        gt.node_count()
    };
    if n_gt < 2 {
        return Err(Error::MetricUndefined(format!(
            "ground truth needs at least 2 nodes, has {n_gt}"
        )));
    }
    let fwd = directional(gt, prop, p)?.ok_or_else(|| {
        Error::MetricUndefined("ground truth has no connected control pair".into())
    })?;
    if !p.symmetric {
        return Ok(AplsReport {
            score: fwd.score,
            score_gt_to_prop: fwd.score,
            score_prop_to_gt: None,
            n_pairs_evaluated: fwd.pairs,
            n_nodes_unsnapped: fwd.unsnapped,
        });
    }
    let rev = directional(prop, gt, p)?;
    let rev_score = rev.map_or(0.0, |r| r.score);
    Ok(AplsReport {
        score: 0.5 * (fwd.score + rev_score),
        score_gt_to_prop: fwd.score,
        score_prop_to_gt: Some(rev_score),
        n_pairs_evaluated: fwd.pairs + rev.map_or(0, |r| r.pairs),
        n_nodes_unsnapped: fwd.unsnapped + rev.map_or(0, |r| r.unsnapped),
    })
}
