//! Workloads shared by the criterion benches.

use roadgraph_core::fixture::SyntheticCity;
use roadgraph_core::metrics::rng::XorShift64Star;
use roadgraph_core::{
    make_fixture, FixtureKind, FixtureParams, GeoTransform, GridKind, RasterGrid, RoadNetwork,
    Tile, TileProvider,
};

pub const PIXEL_M: f64 = 0.3;

pub fn transform() -> GeoTransform {
    GeoTransform::north_up(500000.0, 4000000.0, PIXEL_M).expect("valid transform")
}

/// Noisy synthetic street mask of `n` x `n` pixels.
pub fn city_grid(n: usize, seed: u64) -> RasterGrid {
    let city = SyntheticCity::new(n, n, seed);
    let values = city
        .tile(
            &Tile {
                row0: 0,
                col0: 0,
                rows: n,
                cols: n,
            },
            0,
        )
        .expect("synthetic tiles never fail");
    RasterGrid::new(n, n, values, transform(), GridKind::Probability).expect("valid grid")
}

/// Ground-truth street grid with `streets` streets per axis, and a proposal
/// with about `drop` of its edges removed and nodes jittered by up to 2 m.
pub fn degraded_pair(streets: usize, drop: f64, seed: u64) -> (RoadNetwork, RoadNetwork) {
    let p = FixtureParams {
        nx: streets,
        ny: streets,
        ..Default::default()
    };
    let gt = make_fixture(FixtureKind::GridCity, &p, 0)
        .expect("valid fixture")
        .graph;
    let mut rng = XorShift64Star::new(seed);
    let mut prop = RoadNetwork::new(*gt.transform());
    let mut moved = std::collections::HashMap::new();
    for n in gt.nodes() {
        let q = [
            n.geo[0] + (rng.unit() - 0.5) * 4.0,
            n.geo[1] + (rng.unit() - 0.5) * 4.0,
        ];
        moved.insert(n.id, q);
        prop.add_node_at_geo(n.id, q);
    }
    for e in gt.edges() {
        if rng.unit() < drop {
            continue;
        }
        let mut path = e.geo_path.clone();
        path[0] = moved[&e.u];
        *path.last_mut().unwrap() = moved[&e.v];
        prop.add_edge_geo(e.u, e.v, path).expect("endpoints exist");
    }
    (gt, prop)
}

/// Area processed per hour for an `n` x `n` raster.
pub fn km2_per_hour(n: usize, pixel_m: f64, seconds: f64) -> f64 {
    let km2 = (n as f64 * pixel_m).powi(2) / 1e6;
    km2 * 3600.0 / seconds
}
