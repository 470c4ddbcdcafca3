mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use roadgraph_core::geojson::{
    graph_from_roads, read_graph_geojson, read_roads_geojson, write_graph_geojson,
    write_roads_geojson,
};
use roadgraph_core::raster::RoadLine;
use roadgraph_core::{
    make_fixture, FixtureKind, FixtureParams, GeoTransform, RoadNetwork, VectorRoadSet,
};

fn coord() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e7f64..1e7,
        -1.0f64..1.0,
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
    ]
}

fn road_line() -> impl Strategy<Value = RoadLine> {
    (
        prop::collection::vec((coord(), coord()), 2..8),
        prop::collection::btree_map("[a-z_]{1,6}", "[ -~]{0,12}", 0..3),
    )
        .prop_filter_map("needs 2 distinct vertices", |(pts, attributes)| {
            let mut points: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            points.dedup();
            (points.len() >= 2).then_some(RoadLine { points, attributes })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn roads_round_trip_bit_exact(lines in prop::collection::vec(road_line(), 0..6)) {
        let roads = VectorRoadSet::new(lines).unwrap();
        let read = read_roads_geojson(&write_roads_geojson(&roads)).unwrap();
        prop_assert_eq!(read.skipped, 0);
        prop_assert_eq!(read.roads.lines.len(), roads.lines.len());
        for (a, b) in read.roads.lines.iter().zip(&roads.lines) {
            prop_assert_eq!(&a.attributes, &b.attributes);
            let bits = |l: &RoadLine| l.points.iter().map(|p| (p[0].to_bits(), p[1].to_bits())).collect::<Vec<_>>();
            prop_assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn graph_write_is_a_fixed_point(seed in any::<u64>(), x0 in -1e6f64..1e6, px in 0.05f64..5.0) {
        let pair = common::lattice_pair(seed, 9);
        let t = GeoTransform::north_up(x0, 4e6, px).unwrap();
        let mut g = RoadNetwork::new(t);
        for n in pair.gt.nodes() {
            g.add_node_at_geo(n.id, n.geo);
        }
        for e in pair.gt.edges() {
            g.add_edge_geo(e.u, e.v, e.geo_path.clone()).unwrap();
        }
        let once = write_graph_geojson(&g);
        let back = read_graph_geojson(&once).unwrap();
        prop_assert_eq!(*back.transform(), t);
        prop_assert_eq!(write_graph_geojson(&back), once);
    }
}

#[test]
fn fixture_graphs_survive_write_read() {
    for kind in [
        FixtureKind::GridCity,
        FixtureKind::Ring,
        FixtureKind::SpurForest,
        FixtureKind::RandomTree,
    ] {
        let g = make_fixture(kind, &FixtureParams::default(), 3)
            .unwrap()
            .graph;
        let bytes = write_graph_geojson(&g);
        let back = read_graph_geojson(&bytes).unwrap();
        back.validate().unwrap();
        assert_eq!(back.degree_multiset(), g.degree_multiset(), "{kind:?}");
        assert_eq!(write_graph_geojson(&back), bytes, "{kind:?}");
    }
}

#[test]
fn graph_output_reads_as_road_labels() {
    let g = make_fixture(FixtureKind::GridCity, &FixtureParams::default(), 0)
        .unwrap()
        .graph;
    let read = read_roads_geojson(&write_graph_geojson(&g)).unwrap();
    // Node features are points and are skipped.
    assert_eq!(read.skipped, g.node_count());
    assert_eq!(read.roads.lines.len(), g.edge_count());
    let rebuilt = graph_from_roads(&read.roads, g.transform()).unwrap();
    assert_eq!(rebuilt.degree_multiset(), g.degree_multiset());
    assert!((rebuilt.total_length_m() - g.total_length_m()).abs() < 1e-6 * g.total_length_m());
}

#[test]
fn non_finite_coordinates_are_rejected() {
    for text in [
        r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{},"geometry":{"type":"LineString","coordinates":[[0,0],[NaN,1]]}}]}"#,
        r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{},"geometry":{"type":"LineString","coordinates":[[0,0],[1e999,1]]}}]}"#,
        r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{},"geometry":{"type":"LineString","coordinates":[[0,0],["1",1]]}}]}"#,
    ] {
        assert!(read_roads_geojson(text.as_bytes()).is_err(), "{text}");
    }
    assert!(RoadLine::new(vec![[0.0, 0.0], [f64::NAN, 1.0]]).is_err());
    assert!(RoadLine::new(vec![[0.0, 0.0], [f64::INFINITY, 1.0]]).is_err());
    let bad = RoadLine {
        points: vec![[0.0, 0.0], [1.0, f64::NEG_INFINITY]],
        attributes: BTreeMap::new(),
    };
    assert!(VectorRoadSet::new(vec![bad]).is_err());
}

#[test]
fn skips_are_counted() {
    let text = r#"{"type":"FeatureCollection","features":[
        {"type":"Feature","properties":{"name":"a"},"geometry":{"type":"LineString","coordinates":[[0,0],[0,0]]}},
        {"type":"Feature","properties":{},"geometry":{"type":"Point","coordinates":[1,1]}},
        {"type":"Feature","properties":{},"geometry":null},
        {"type":"Feature","properties":{"lanes":2},"geometry":{"type":"MultiLineString","coordinates":[[[0,0],[1,0]],[[2,2],[3,3],[3,3]]]}}
    ]}"#;
    let read = read_roads_geojson(text.as_bytes()).unwrap();
    assert_eq!(read.skipped, 3);
    assert_eq!(read.roads.lines.len(), 2);
    assert_eq!(read.roads.lines[1].points, vec![[2.0, 2.0], [3.0, 3.0]]);
    assert_eq!(read.roads.lines[0].attributes["lanes"], "2");
}
