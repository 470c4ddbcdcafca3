mod common;

use proptest::prelude::*;
use roadgraph_core::metrics::rng::XorShift64Star;
use roadgraph_core::{nearest_node, shortest_route, Error, GeoTransform, RoadNetwork};

fn polyline_length(pts: &[[f64; 2]]) -> f64 {
    pts.windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .sum()
}

fn street_grid(n: usize, spacing: f64) -> RoadNetwork {
    let mut g = RoadNetwork::new(GeoTransform::identity());
    let id = |r: usize, c: usize| (r * n + c) as u64;
    let at = |r: usize, c: usize| [c as f64 * spacing, r as f64 * spacing];
    for r in 0..n {
        for c in 0..n {
            g.add_node_at_geo(id(r, c), at(r, c));
        }
    }
    for r in 0..n {
        for c in 0..n {
            if c + 1 < n {
                g.add_edge_geo(id(r, c), id(r, c + 1), vec![at(r, c), at(r, c + 1)])
                    .unwrap();
            }
            if r + 1 < n {
                g.add_edge_geo(id(r, c), id(r + 1, c), vec![at(r, c), at(r + 1, c)])
                    .unwrap();
            }
        }
    }
    g
}

#[test]
fn grid_routes_have_manhattan_length() {
    let g = street_grid(10, 10.0);
    for a in 0..100u64 {
        for b in (0..100u64).step_by(7) {
            let r = shortest_route(&g, a, b).unwrap();
            let (ra, ca, rb, cb) = (a / 10, a % 10, b / 10, b % 10);
            let manhattan = 10.0 * (ra.abs_diff(rb) + ca.abs_diff(cb)) as f64;
            assert!((r.total_length_m - manhattan).abs() < 1e-9, "{a} -> {b}");
            assert_eq!(
                r.node_sequence.len() as u64,
                ra.abs_diff(rb) + ca.abs_diff(cb) + 1
            );
        }
    }
}

#[test]
fn disconnected_nodes_are_unreachable() {
    let mut g = street_grid(2, 10.0);
    g.add_node_at_geo(99, [500.0, 500.0]);
    assert!(matches!(
        shortest_route(&g, 0, 99),
        Err(Error::Unreachable { .. })
    ));
    assert!(matches!(
        shortest_route(&g, 0, 1234),
        Err(Error::UnknownNode(1234))
    ));
}

#[test]
fn nearest_node_matches_exhaustive_scan() {
    let mut rng = XorShift64Star::new(11);
    let mut g = RoadNetwork::new(GeoTransform::identity());
    let mut pts = Vec::new();
    for i in 0..50u64 {
        let p = [rng.unit() * 1000.0, rng.unit() * 1000.0];
        g.add_node_at_geo(i, p);
        pts.push(p);
    }
    for _ in 0..1000 {
        let q = [rng.unit() * 1200.0 - 100.0, rng.unit() * 1200.0 - 100.0];
        let d = |p: [f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]);
        let oracle = (0..50)
            .min_by(|&a, &b| d(pts[a]).total_cmp(&d(pts[b])))
            .unwrap() as u64;
        assert_eq!(nearest_node(&g, q).unwrap(), oracle);
    }
    assert!(nearest_node(&RoadNetwork::new(GeoTransform::identity()), [0.0, 0.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn routes_agree_with_all_pairs_oracle(seed in any::<u64>()) {
        let g = common::lattice_pair(seed, 9).gt;
        let (ids, dist) = common::floyd_warshall(&g);
        let n = ids.len();
        let mut len = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let r = shortest_route(&g, ids[i], ids[j]).unwrap();
                let tol = 1e-9 * dist[i][j].max(1.0);
                prop_assert!((r.total_length_m - dist[i][j]).abs() <= tol);
                prop_assert!((polyline_length(&r.geometry) - r.total_length_m).abs() <= tol);
                prop_assert_eq!(r.node_sequence.first(), Some(&ids[i]));
                prop_assert_eq!(r.node_sequence.last(), Some(&ids[j]));
                prop_assert_eq!(r.geometry.first(), Some(&g.node(ids[i]).unwrap().geo));
                prop_assert_eq!(r.geometry.last(), Some(&g.node(ids[j]).unwrap().geo));
                len[i][j] = r.total_length_m;
            }
        }
        for i in 0..n {
            for j in 0..n {
                prop_assert!((len[i][j] - len[j][i]).abs() <= 1e-9 * len[i][j].max(1.0));
                for k in 0..n {
                    prop_assert!(len[i][k] <= len[i][j] + len[j][k] + 1e-9);
                }
            }
        }
    }
}
