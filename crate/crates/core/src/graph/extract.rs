//! Skeleton tracing: nodes at end points and junction clusters, edges along
//! the maximal pixel chains between them.

use std::collections::{HashMap, HashSet, VecDeque};

use rayon::prelude::*;

use super::{NodeId, RoadNetwork};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::raster::{find_block, GeoTransform, Mask, RasterGrid};

const OFFSETS: [(isize, isize); 8] = [
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Graph traced from a skeleton plus, per node, the skeleton pixels it absorbed.
#[derive(Debug, Clone)]
pub struct Traced {
    pub network: RoadNetwork,
    /// Junction-cluster (or single end point) pixels per node id, as `(row, col)`.
    pub footprints: HashMap<NodeId, Vec<(usize, usize)>>,
}

struct Bitset(Vec<u64>);

impl Bitset {
    fn new(n: usize) -> Self {
        Bitset(vec![0; n.div_ceil(64)])
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
}

fn neighbors(mask: &Mask, idx: usize) -> impl Iterator<Item = usize> + '_ {
    let w = mask.width;
    let (r, c) = ((idx / w) as isize, (idx % w) as isize);
    OFFSETS.iter().filter_map(move |&(dr, dc)| {
        let (rr, cc) = (r + dr, c + dc);
        mask.get_signed(rr, cc)
            .then(|| rr as usize * w + cc as usize)
    })
}

fn pixel_point(idx: usize, w: usize) -> Point {
    [(idx / w) as f64, (idx % w) as f64]
}

/// Shortest 8-connected path inside one cluster, `from` to `to` inclusive.
fn cluster_path(mask: &Mask, members: &HashSet<usize>, from: usize, to: usize) -> Vec<usize> {
    if from == to {
        return vec![from];
    }
    let mut prev: HashMap<usize, usize> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    prev.insert(from, from);
    while let Some(cur) = queue.pop_front() {
        if cur == to {
            break;
        }
        for n in neighbors(mask, cur) {
            if members.contains(&n) && !prev.contains_key(&n) {
                prev.insert(n, cur);
                queue.push_back(n);
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[&cur];
        path.push(cur);
    }
    path.reverse();
    path
}

/// Traces a thin skeleton mask into a graph.
pub fn trace_mask(mask: &Mask, transform: &GeoTransform) -> Result<Traced> {
    transform.validate()?;
    if let Some((row, col)) = find_block(mask) {
        return Err(Error::Precondition {
            row,
            col,
            reason: "skeleton contains a 2x2 foreground block (not thin)".into(),
        });
    }
    let w = mask.width;
    let degree = |idx: usize| neighbors(mask, idx).count();

    let node_pixels: Vec<usize> = (0..mask.height)
        .into_par_iter()
        .flat_map_iter(|r| {
            (r * w..(r + 1) * w).filter(move |&i| mask.data[i] != 0 && degree(i) != 2)
        })
        .collect();

    // Cluster junction pixels (degree >= 3) by 8-adjacency; every other node
    // pixel is its own cluster.
    let mut cluster_of: HashMap<usize, usize> = HashMap::with_capacity(node_pixels.len());
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &p in &node_pixels {
        if cluster_of.contains_key(&p) {
            continue;
        }
        let cid = clusters.len();
        cluster_of.insert(p, cid);
        let mut members = vec![p];
        if degree(p) >= 3 {
            let mut stack = vec![p];
            while let Some(cur) = stack.pop() {
                for n in neighbors(mask, cur) {
                    if degree(n) >= 3 && !cluster_of.contains_key(&n) {
                        cluster_of.insert(n, cid);
                        members.push(n);
                        stack.push(n);
                    }
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }

    // Representative: member nearest the centroid, ties to the lowest (row, col).
    let reps: Vec<usize> = clusters
        .iter()
        .map(|m| {
            let n = m.len() as f64;
            let (sr, sc) = m.iter().fold((0.0, 0.0), |(a, b), &i| {
                let p = pixel_point(i, w);
                (a + p[0], b + p[1])
            });
            let (cr, cc) = (sr / n, sc / n);
            *m.iter()
                .min_by(|&&a, &&b| {
                    let pa = pixel_point(a, w);
                    let pb = pixel_point(b, w);
                    let da = (pa[0] - cr).powi(2) + (pa[1] - cc).powi(2);
                    let db = (pb[0] - cr).powi(2) + (pb[1] - cc).powi(2);
                    da.total_cmp(&db).then(a.cmp(&b))
                })
                .expect("cluster is nonempty")
        })
        .collect();

    // Node ids follow the representative's raster order.
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by_key(|&c| reps[c]);
    let mut node_of_cluster = vec![0 as NodeId; clusters.len()];
    let mut network = RoadNetwork::new(*transform);
    let mut footprints = HashMap::with_capacity(clusters.len());
    for (id, &c) in order.iter().enumerate() {
        let id = id as NodeId;
        node_of_cluster[c] = id;
        network.add_node_at_pixel(id, pixel_point(reps[c], w));
        footprints.insert(id, clusters[c].iter().map(|&i| (i / w, i % w)).collect());
    }

    let member_sets: Vec<HashSet<usize>> = clusters
        .iter()
        .map(|m| m.iter().copied().collect())
        .collect();
    let mut visited = Bitset::new(mask.data.len());
    let mut direct_pairs: HashSet<(usize, usize)> = HashSet::new();

    let to_points =
        |idxs: &[usize]| -> Vec<Point> { idxs.iter().map(|&i| pixel_point(i, w)).collect() };

    for &c in &order {
        for &start in &clusters[c] {
            for first in neighbors(mask, start).collect::<Vec<_>>() {
                if cluster_of.get(&first) == Some(&c) {
                    continue;
                }
                let mut chain = vec![start];
                let end = if let Some(&other) = cluster_of.get(&first) {
                    let key = (start.min(first), start.max(first));
                    if !direct_pairs.insert(key) {
                        continue;
                    }
                    chain.push(first);
                    other
                } else {
                    if visited.get(first) {
                        continue;
                    }
                    let (mut prev, mut cur) = (start, first);
                    loop {
                        visited.set(cur);
                        chain.push(cur);
                        if let Some(&other) = cluster_of.get(&cur) {
                            break other;
                        }
                        let next = neighbors(mask, cur)
                            .find(|&n| n != prev)
                            .expect("chain pixel has two neighbors");
                        prev = cur;
                        cur = next;
                    }
                };
                let end_pixel = *chain.last().unwrap();
                let mut full = cluster_path(mask, &member_sets[c], reps[c], start);
                full.pop();
                full.extend_from_slice(&chain);
                let tail = cluster_path(mask, &member_sets[end], end_pixel, reps[end]);
                full.extend_from_slice(&tail[1..]);
                network.add_edge_pixels(
                    node_of_cluster[c],
                    node_of_cluster[end],
                    to_points(&full),
                )?;
            }
        }
    }

    // Whatever chain pixels remain form isolated simple cycles.
    let mut next_id = network.next_node_id();
    for start in 0..mask.data.len() {
        if mask.data[start] == 0 || visited.get(start) || cluster_of.contains_key(&start) {
            continue;
        }
        let id = next_id;
        next_id += 1;
        network.add_node_at_pixel(id, pixel_point(start, w));
        footprints.insert(id, vec![(start / w, start % w)]);
        visited.set(start);
        let mut ring = vec![start];
        let (mut prev, mut cur) = (start, neighbors(mask, start).next().expect("cycle pixel"));
        while cur != start {
            visited.set(cur);
            ring.push(cur);
            let next = neighbors(mask, cur)
                .find(|&n| n != prev)
                .expect("cycle pixel has two neighbors");
            prev = cur;
            cur = next;
        }
        ring.push(start);
        network.add_edge_pixels(id, id, to_points(&ring))?;
    }
    Ok(Traced {
        network,
        footprints,
    })
}

/// Converts a thin skeleton raster into a geo-registered road graph.
pub fn skeleton_to_graph(skeleton: &RasterGrid, transform: &GeoTransform) -> Result<RoadNetwork> {
    Ok(trace_mask(&skeleton.to_mask()?, transform)?.network)
}
