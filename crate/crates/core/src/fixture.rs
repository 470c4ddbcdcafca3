//! Synthetic road layouts with known ground truth, for tests and benchmarks.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, project_on_segment, Point};
use crate::graph::{NodeId, RoadNetwork};
use crate::metrics::rng::{splitmix64, XorShift64Star};
use crate::raster::{
    rasterize_centerlines, GeoTransform, GridKind, RasterGrid, RoadLine, VectorRoadSet,
};
use crate::tiling::{Tile, TileProvider};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    GridCity,
    Ring,
    SpurForest,
    RandomTree,
}

impl FromStr for FixtureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid_city" => Ok(FixtureKind::GridCity),
            "ring" => Ok(FixtureKind::Ring),
            "spur_forest" => Ok(FixtureKind::SpurForest),
            "random_tree" => Ok(FixtureKind::RandomTree),
            other => Err(Error::param(
                "kind",
                format!("unknown fixture kind `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixtureParams {
    /// Vertical and horizontal street counts (grid_city).
    pub nx: usize,
    pub ny: usize,
    /// Street spacing (grid_city) and trunk spur interval (spur_forest).
    pub spacing_m: f64,
    /// Length of the dead ends past the outermost streets (grid_city).
    pub stub_m: f64,
    pub ring_radius_m: f64,
    pub ring_vertices: usize,
    pub n_spurs: usize,
    pub n_nodes: usize,
    pub pixel_m: f64,
    pub halfwidth_m: f64,
    /// Empty border around the roads.
    pub margin_m: f64,
    /// Geographic position of the extent's top-left corner.
    pub origin: Point,
}

impl Default for FixtureParams {
    fn default() -> Self {
        FixtureParams {
            nx: 3,
            ny: 3,
            spacing_m: 100.0,
            stub_m: 50.0,
            ring_radius_m: 100.0,
            ring_vertices: 256,
            n_spurs: 8,
            n_nodes: 12,
            pixel_m: 0.3,
            halfwidth_m: 2.0,
            margin_m: 15.0,
            origin: [500000.0, 4000000.0],
        }
    }
}

impl FixtureParams {
    fn validate(&self, kind: FixtureKind) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be positive"))
            }
        };
        pos("pixel_m", self.pixel_m)?;
        pos("halfwidth_m", self.halfwidth_m)?;
        if self.margin_m.is_nan() || self.margin_m < 0.0 {
            return Err(Error::param("margin_m", "must be non-negative"));
        }
        match kind {
            FixtureKind::GridCity => {
                if self.nx == 0 || self.ny == 0 {
                    return Err(Error::param(
                        "nx",
                        "grid needs at least one street each way",
                    ));
                }
                pos("spacing_m", self.spacing_m)?;
                pos("stub_m", self.stub_m)
            }
            FixtureKind::Ring => {
                pos("ring_radius_m", self.ring_radius_m)?;
                if self.ring_vertices < 64 {
                    return Err(Error::param("ring_vertices", "must be at least 64"));
                }
                Ok(())
            }
            FixtureKind::SpurForest => pos("spacing_m", self.spacing_m),
            FixtureKind::RandomTree => {
                if self.n_nodes < 2 {
                    return Err(Error::param("n_nodes", "must be at least 2"));
                }
                Ok(())
            }
        }
    }
}

/// Vector truth, its rasterization and the analytic graph, all sharing one
/// geotransform.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub raster: RasterGrid,
    pub roads: VectorRoadSet,
    pub graph: RoadNetwork,
}

/// Layout in local meters (x east, y north, origin at bottom-left).
struct Layout {
    nodes: Vec<Point>,
    /// Edges as node indices plus the full polyline.
    edges: Vec<(usize, usize, Vec<Point>)>,
    lines: Vec<Vec<Point>>,
}

pub fn make_fixture(kind: FixtureKind, p: &FixtureParams, seed: u64) -> Result<Fixture> {
    p.validate(kind)?;
    let layout = match kind {
        FixtureKind::GridCity => grid_city(p),
        FixtureKind::Ring => ring(p),
        FixtureKind::SpurForest => spur_forest(p, seed),
        FixtureKind::RandomTree => random_tree(p, seed)?,
    };
    build(layout, p)
}

fn build(layout: Layout, p: &FixtureParams) -> Result<Fixture> {
    let all = layout.lines.iter().flatten();
    let (mut max_x, mut max_y) = (0.0f64, 0.0f64);
    for q in all {
        max_x = max_x.max(q[0]);
        max_y = max_y.max(q[1]);
    }
    let width = ((max_x + 2.0 * p.margin_m) / p.pixel_m).ceil() as usize + 1;
    let height = ((max_y + 2.0 * p.margin_m) / p.pixel_m).ceil() as usize + 1;
    let transform = GeoTransform::north_up(p.origin[0], p.origin[1], p.pixel_m)?;
    // Local (x, y) is measured from the bottom-left of the road box.
    let to_geo = |q: &Point| {
        [
            p.origin[0] + p.margin_m + q[0],
            p.origin[1] - p.margin_m - (max_y - q[1]),
        ]
    };

    let lines = layout
        .lines
        .iter()
        .map(|l| RoadLine::new(l.iter().map(to_geo).collect()))
        .collect::<Result<Vec<_>>>()?;
    let roads = VectorRoadSet::new(lines)?;
    let raster = rasterize_centerlines(&roads, width, height, &transform, p.halfwidth_m)?;

    // Node ids follow raster order of the node positions.
    let geo_nodes: Vec<Point> = layout.nodes.iter().map(to_geo).collect();
    let mut order: Vec<usize> = (0..geo_nodes.len()).collect();
    order.sort_by(|&a, &b| {
        let pa = transform.geo_to_pixel(geo_nodes[a][0], geo_nodes[a][1]);
        let pb = transform.geo_to_pixel(geo_nodes[b][0], geo_nodes[b][1]);
        pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1]))
    });
    let mut id_of = vec![0; geo_nodes.len()];
    let mut graph = RoadNetwork::new(transform);
    for (id, &i) in order.iter().enumerate() {
        id_of[i] = id as NodeId;
        graph.add_node_at_geo(id as NodeId, geo_nodes[i]);
    }
    for (a, b, path) in &layout.edges {
        let geo: Vec<Point> = path.iter().map(to_geo).collect();
        graph.add_edge_geo(id_of[*a], id_of[*b], geo)?;
    }
    Ok(Fixture {
        raster,
        roads,
        graph,
    })
}

fn grid_city(p: &FixtureParams) -> Layout {
    let (nx, ny, s, stub) = (p.nx, p.ny, p.spacing_m, p.stub_m);
    let xs: Vec<f64> = (0..nx).map(|i| stub + i as f64 * s).collect();
    let ys: Vec<f64> = (0..ny).map(|j| stub + j as f64 * s).collect();
    let x_end = 2.0 * stub + (nx - 1) as f64 * s;
    let y_end = 2.0 * stub + (ny - 1) as f64 * s;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut lines = Vec::new();
    let add = |q: Point, nodes: &mut Vec<Point>| {
        nodes.push(q);
        nodes.len() - 1
    };
    // Intersections first, indexed [i][j].
    let mut cross = vec![vec![0; ny]; nx];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            cross[i][j] = add([x, y], &mut nodes);
        }
    }
    for (i, &x) in xs.iter().enumerate() {
        let mut chain = vec![add([x, 0.0], &mut nodes)];
        chain.extend((0..ny).map(|j| cross[i][j]));
        chain.push(add([x, y_end], &mut nodes));
        for w in chain.windows(2) {
            edges.push((w[0], w[1], vec![nodes[w[0]], nodes[w[1]]]));
        }
        lines.push(vec![[x, 0.0], [x, y_end]]);
    }
    for (j, &y) in ys.iter().enumerate() {
        let mut chain = vec![add([0.0, y], &mut nodes)];
        chain.extend((0..nx).map(|i| cross[i][j]));
        chain.push(add([x_end, y], &mut nodes));
        for w in chain.windows(2) {
            edges.push((w[0], w[1], vec![nodes[w[0]], nodes[w[1]]]));
        }
        lines.push(vec![[0.0, y], [x_end, y]]);
    }
    Layout {
        nodes,
        edges,
        lines,
    }
}

fn ring(p: &FixtureParams) -> Layout {
    let r = p.ring_radius_m;
    let n = p.ring_vertices;
    // Starts at the top, the ring's first pixel in raster order.
    let mut pts: Vec<Point> = (0..n)
        .map(|k| {
            let a = std::f64::consts::FRAC_PI_2 - 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            [r + r * a.cos(), r + r * a.sin()]
        })
        .collect();
    pts[0] = [r, 2.0 * r];
    let mut closed = pts.clone();
    closed.push(pts[0]);
    Layout {
        nodes: vec![pts[0]],
        edges: vec![(0, 0, closed.clone())],
        lines: vec![closed],
    }
}

fn spur_forest(p: &FixtureParams, seed: u64) -> Layout {
    let mut rng = XorShift64Star::new(seed);
    let step = p.spacing_m * 0.4;
    let max_len = 60.0;
    let base = max_len;
    let trunk_len = (p.n_spurs + 1) as f64 * step;
    let mut nodes = vec![[0.0, base]];
    let mut edges = Vec::new();
    let mut lines = vec![vec![[0.0, base], [trunk_len, base]]];
    let mut prev = 0;
    for k in 0..p.n_spurs {
        let x = (k + 1) as f64 * step;
        nodes.push([x, base]);
        let j = nodes.len() - 1;
        edges.push((prev, j, vec![nodes[prev], nodes[j]]));
        prev = j;
        let len = 15.0 + rng.unit() * (max_len - 15.0);
        let tip = if k % 2 == 0 {
            [x, base + len]
        } else {
            [x, base - len]
        };
        nodes.push(tip);
        let t = nodes.len() - 1;
        edges.push((j, t, vec![nodes[j], tip]));
        lines.push(vec![[x, base], tip]);
    }
    nodes.push([trunk_len, base]);
    let end = nodes.len() - 1;
    edges.push((prev, end, vec![nodes[prev], nodes[end]]));
    Layout {
        nodes,
        edges,
        lines,
    }
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let orient = |p: Point, q: Point, r: Point| {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    };
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn random_tree(p: &FixtureParams, seed: u64) -> Result<Layout> {
    const MIN_EDGE: f64 = 40.0;
    const MAX_EDGE: f64 = 150.0;
    const CLEARANCE: f64 = 25.0;
    const MIN_ANGLE: f64 = 0.5;
    let side = 80.0 * (p.n_nodes as f64).sqrt() + 2.0 * MAX_EDGE;
    let mut rng = XorShift64Star::new(seed);
    let mut nodes: Vec<Point> = vec![[side / 2.0, side / 2.0]];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut attempts = 0;
    while nodes.len() < p.n_nodes {
        attempts += 1;
        if attempts > 200_000 {
            return Err(Error::Internal(
                "random_tree placement did not converge".into(),
            ));
        }
        let q = [rng.unit() * side, rng.unit() * side];
        let (parent, d) = nodes
            .iter()
            .enumerate()
            .map(|(i, &n)| (i, dist(n, q)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if !(MIN_EDGE..=MAX_EDGE).contains(&d) {
            continue;
        }
        let pp = nodes[parent];
        let ok_edges = edges.iter().all(|&(a, b)| {
            let (ea, eb) = (nodes[a], nodes[b]);
            if project_on_segment(q, ea, eb).0 < CLEARANCE {
                return false;
            }
            if a == parent || b == parent {
                // Keep a clear angle at the shared node.
                let other = if a == parent { eb } else { ea };
                let u = [q[0] - pp[0], q[1] - pp[1]];
                let v = [other[0] - pp[0], other[1] - pp[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                return cos.clamp(-1.0, 1.0).acos() >= MIN_ANGLE;
            }
            !segments_cross(pp, q, ea, eb)
        });
        let ok_nodes = nodes
            .iter()
            .enumerate()
            .all(|(i, &n)| i == parent || project_on_segment(n, pp, q).0 >= CLEARANCE);
        if ok_edges && ok_nodes {
            nodes.push(q);
            edges.push((parent, nodes.len() - 1));
        }
    }
    // Shift so the bounding box starts at the origin.
    let min_x = nodes.iter().map(|n| n[0]).fold(f64::INFINITY, f64::min);
    let min_y = nodes.iter().map(|n| n[1]).fold(f64::INFINITY, f64::min);
    for n in &mut nodes {
        *n = [n[0] - min_x, n[1] - min_y];
    }
    let edges: Vec<(usize, usize, Vec<Point>)> = edges
        .iter()
        .map(|&(a, b)| (a, b, vec![nodes[a], nodes[b]]))
        .collect();
    let lines = edges.iter().map(|e| e.2.clone()).collect();
    Ok(Layout {
        nodes,
        edges,
        lines,
    })
}

/// Binary fixture raster as probabilities, with a fraction of pixels forced
/// to 0 or 1 at random.
pub fn salt_and_pepper(grid: &RasterGrid, fraction: f64, seed: u64) -> Result<RasterGrid> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::param("fraction", "must lie in [0, 1]"));
    }
    let mut rng = XorShift64Star::new(seed);
    let values = grid
        .values()
        .iter()
        .map(|&v| {
            if rng.unit() < fraction {
                if rng.next_u64() & 1 == 1 {
                    1.0
                } else {
                    0.0
                }
            } else {
                v
            }
        })
        .collect();
    RasterGrid::new(
        grid.width(),
        grid.height(),
        values,
        *grid.transform(),
        GridKind::Probability,
    )
}

/// Procedural probability raster of a street grid with a diagonal avenue and
/// per-pixel noise. The seed picks the street offsets and the avenue. Every pixel value depends only on its global position, so
/// overlapping tiles agree.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticCity {
    pub width: usize,
    pub height: usize,
    pub spacing_px: usize,
    pub halfwidth_px: f64,
    pub seed: u64,
}

impl SyntheticCity {
    pub fn new(width: usize, height: usize, seed: u64) -> Self {
        SyntheticCity {
            width,
            height,
            spacing_px: 400,
            halfwidth_px: 6.5,
            seed,
        }
    }

    pub fn value(&self, row: usize, col: usize) -> f32 {
        let s = self.spacing_px as f64;
        let layout =
            |k: u64| (splitmix64(self.seed.wrapping_add(k)) % self.spacing_px as u64) as f64;
        let axis = |v: usize, off: f64| {
            let m = (v as f64 - off).rem_euclid(s);
            m.min(s - m)
        };
        let (r, c) = (row as f64, col as f64);
        let shift = layout(2) - s / 2.0;
        let diag = if self.seed & 1 == 0 {
            (r - c - shift).abs()
        } else {
            (r + c - self.width as f64 - shift).abs()
        } / std::f64::consts::SQRT_2;
        let d = axis(row, layout(0)).min(axis(col, layout(1))).min(diag);
        let h = splitmix64(self.seed ^ ((row as u64) << 32 | col as u64));
        let noise = (h >> 40) as f32 / (1u64 << 24) as f32;
        if d <= self.halfwidth_px {
            0.6 + 0.4 * noise
        } else {
            0.25 * noise
        }
    }
}

impl TileProvider for SyntheticCity {
    fn n_models(&self) -> usize {
        1
    }

    fn tile(&self, tile: &Tile, _model: usize) -> Result<Vec<f32>> {
        let mut out = Vec::with_capacity(tile.rows * tile.cols);
        for r in tile.row0..tile.row0 + tile.rows {
            for c in tile.col0..tile.col0 + tile.cols {
                out.push(self.value(r, c));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_city_counts() {
        let f = make_fixture(FixtureKind::GridCity, &FixtureParams::default(), 0).unwrap();
        assert_eq!(f.graph.node_count(), 9 + 12);
        assert_eq!(f.graph.edge_count(), 24);
        let d = f.graph.degree_multiset();
        assert_eq!(d.iter().filter(|&&x| x == 4).count(), 9);
        assert_eq!(d.iter().filter(|&&x| x == 1).count(), 12);
        f.graph.validate().unwrap();
    }

    #[test]
    fn ring_circumference() {
        let f = make_fixture(FixtureKind::Ring, &FixtureParams::default(), 0).unwrap();
        assert_eq!((f.graph.node_count(), f.graph.edge_count()), (1, 1));
        let l = f.graph.edges()[0].length_m;
        let want = 2.0 * std::f64::consts::PI * 100.0;
        assert!((l - want).abs() / want < 0.01);
    }

    #[test]
    fn random_tree_is_deterministic() {
        let p = FixtureParams::default();
        let a = make_fixture(FixtureKind::RandomTree, &p, 5).unwrap();
        let b = make_fixture(FixtureKind::RandomTree, &p, 5).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.roads, b.roads);
        assert_eq!(a.raster, b.raster);
        assert_eq!(a.graph.edge_count(), p.n_nodes - 1);
        assert_eq!(a.graph.components().len(), 1);
    }

    #[test]
    fn spur_forest_shape() {
        let f = make_fixture(FixtureKind::SpurForest, &FixtureParams::default(), 3).unwrap();
        assert_eq!(f.graph.node_count(), 2 + 2 * 8);
        assert_eq!(f.graph.edge_count(), 9 + 8);
    }

    #[test]
    fn raster_matches_roads() {
        let f = make_fixture(FixtureKind::GridCity, &FixtureParams::default(), 0).unwrap();
        let t = f.raster.transform();
        for n in f.graph.nodes() {
            let [r, c] = t.geo_to_pixel(n.geo[0], n.geo[1]);
            assert_eq!(f.raster.get(r.round() as usize, c.round() as usize), 1.0);
        }
        // Margin stays empty.
        assert!((0..f.raster.width()).all(|c| f.raster.get(0, c) == 0.0));
    }

    #[test]
    fn city_tiles_agree() {
        let city = SyntheticCity::new(1000, 1000, 1);
        let a = city
            .tile(
                &Tile {
                    row0: 100,
                    col0: 200,
                    rows: 5,
                    cols: 5,
                },
                0,
            )
            .unwrap();
        assert_eq!(a[7], city.value(101, 202));
        assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
