use roadgraph_bench::{city_grid, degraded_pair, km2_per_hour};
use roadgraph_core::{apls, AplsParams};

#[test]
fn city_grid_is_a_probability_raster() {
    let g = city_grid(300, 4);
    assert_eq!((g.width(), g.height()), (300, 300));
    assert!(g.values().iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(g.values().iter().any(|&v| v > 0.5));
}

#[test]
fn degraded_pair_scores_below_one() {
    let (gt, prop) = degraded_pair(4, 0.2, 1);
    assert_eq!(gt.node_count(), prop.node_count());
    assert!(prop.edge_count() < gt.edge_count());
    let s = apls(&gt, &prop, &AplsParams::default()).unwrap().score;
    assert!(s > 0.0 && s < 1.0, "{s}");
    let (_, same) = degraded_pair(4, 0.0, 1);
    assert_eq!(same.edge_count(), gt.edge_count());
}

#[test]
fn throughput_units() {
    // 10 000 px at 0.3 m is 9 km2; one hour of work gives 9 km2/h.
    assert!((km2_per_hour(10_000, 0.3, 3600.0) - 9.0).abs() < 1e-9);
}
