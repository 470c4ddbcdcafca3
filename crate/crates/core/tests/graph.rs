mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use roadgraph_core::fixture::salt_and_pepper;
use roadgraph_core::geojson::write_graph_geojson;
use roadgraph_core::graph::{
    connect_terminals, prune_short_spurs, refine_with_order, remove_small_subgraphs, trace_mask,
    RefineStep,
};
use roadgraph_core::pipeline::clean_values;
use roadgraph_core::raster::{rasterize_centerlines, skeletonize_mask, RoadLine};
use roadgraph_core::{
    make_fixture, refine, CleanParams, Fixture, FixtureKind, FixtureParams, GeoTransform,
    RefineParams, RoadNetwork, VectorRoadSet,
};

fn coarse_fixtures() -> Vec<(String, Fixture)> {
    let p = FixtureParams {
        pixel_m: 5.0,
        halfwidth_m: 6.0,
        n_nodes: 8,
        ..Default::default()
    };
    let mut out = Vec::new();
    for (kind, seeds) in [
        (FixtureKind::GridCity, 0..1),
        (FixtureKind::Ring, 0..1),
        (FixtureKind::SpurForest, 0..5),
        (FixtureKind::RandomTree, 0..10),
    ] {
        for seed in seeds {
            let f = make_fixture(kind, &p, seed).unwrap();
            if f.raster.width() <= 128 && f.raster.height() <= 128 {
                out.push((format!("{kind:?}/{seed}"), f));
            }
        }
    }
    out
}

fn skeleton_graph(
    values: &[f32],
    w: usize,
    h: usize,
    t: &GeoTransform,
) -> (roadgraph_core::Mask, RoadNetwork) {
    let mask = roadgraph_core::Mask::from_fn(w, h, |r, c| values[r * w + c] >= 0.5);
    let skel = skeletonize_mask(&mask);
    let g = trace_mask(&skel, t).unwrap().network;
    (skel, g)
}

#[test]
fn coarse_fixtures_fit_the_round_trip_size() {
    assert!(coarse_fixtures().len() >= 10);
}

#[test]
fn extraction_is_lossless_over_skeleton_pixels() {
    for (name, f) in coarse_fixtures() {
        let (w, h) = (f.raster.width(), f.raster.height());
        let mask = roadgraph_core::Mask::from_fn(w, h, |r, c| f.raster.get(r, c) >= 0.5);
        let skel = skeletonize_mask(&mask);
        let traced = trace_mask(&skel, f.raster.transform()).unwrap();
        let mut covered = BTreeSet::new();
        for e in traced.network.edges() {
            covered.extend(e.path.iter().map(|p| (p[0] as usize, p[1] as usize)));
        }
        for pixels in traced.footprints.values() {
            covered.extend(pixels.iter().copied());
        }
        let on: BTreeSet<(usize, usize)> = (0..h)
            .flat_map(|r| (0..w).map(move |c| (r, c)))
            .filter(|&(r, c)| skel.get(r, c))
            .collect();
        assert_eq!(covered, on, "{name}");
        traced.network.validate().unwrap();
    }
}

#[test]
fn rasterize_and_reextract_keeps_degrees() {
    for (name, f) in coarse_fixtures() {
        let (w, h, t) = (f.raster.width(), f.raster.height(), *f.raster.transform());
        let (_, g1) = skeleton_graph(f.raster.values(), w, h, &t);
        let lines: Vec<RoadLine> = g1
            .edges()
            .iter()
            .map(|e| RoadLine::new(e.geo_path.clone()).unwrap())
            .collect();
        let redrawn = rasterize_centerlines(
            &VectorRoadSet::new(lines).unwrap(),
            w,
            h,
            &t,
            t.pixel_size() / 2.0,
        )
        .unwrap();
        let nodes = g1.nodes().map(|n| n.pixel).collect::<Vec<_>>();
        let mut values = redrawn.into_values();
        for p in nodes {
            values[p[0] as usize * w + p[1] as usize] = 1.0;
        }
        let (_, g2) = skeleton_graph(&values, w, h, &t);
        assert_eq!(g1.degree_multiset(), g2.degree_multiset(), "{name}");
    }
}

fn noisy_extraction() -> RoadNetwork {
    let f = make_fixture(FixtureKind::GridCity, &FixtureParams::default(), 0).unwrap();
    let noisy = salt_and_pepper(&f.raster, 0.08, 4).unwrap();
    let light = CleanParams {
        open_radius: 0,
        close_radius: 1,
        smooth_radius: 0,
        ..Default::default()
    };
    let mask = clean_values(noisy.values(), noisy.width(), noisy.height(), &light).unwrap();
    trace_mask(&skeletonize_mask(&mask), noisy.transform())
        .unwrap()
        .network
}

#[test]
fn refine_is_deterministic_and_valid() {
    let g = noisy_extraction();
    assert!(
        g.node_count() > 50,
        "expected a messy graph, got {} nodes",
        g.node_count()
    );
    let p = RefineParams::default();
    let a = refine(&g, &p).unwrap();
    let b = refine(&g, &p).unwrap();
    assert_eq!(write_graph_geojson(&a), write_graph_geojson(&b));
    a.validate().unwrap();
    for out in [
        prune_short_spurs(&g, p.max_spur_px),
        connect_terminals(&g, p.max_gap_px),
        remove_small_subgraphs(&g, p.min_subgraph_m),
        refine_with_order(
            &g,
            &p,
            &[
                RefineStep::RemoveSmallSubgraphs,
                RefineStep::ConnectTerminals,
                RefineStep::PruneSpurs,
            ],
        )
        .unwrap(),
    ] {
        out.validate().unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn small_subgraph_removal_keeps_survivors_intact(seeds in prop::collection::vec(any::<u64>(), 1..5), min_m in 1.0f64..600.0) {
        // Disjoint union of lattice graphs, shifted apart.
        let mut g = RoadNetwork::new(GeoTransform::identity());
        for (k, s) in seeds.iter().enumerate() {
            let part = common::lattice_pair(*s, 8).gt;
            let shift = 1000.0 * k as f64;
            let id = |n: u64| n + 100 * k as u64;
            for n in part.nodes() {
                g.add_node_at_geo(id(n.id), [n.geo[0] + shift, n.geo[1]]);
            }
            for e in part.edges() {
                let path = e.geo_path.iter().map(|p| [p[0] + shift, p[1]]).collect();
                g.add_edge_geo(id(e.u), id(e.v), path).unwrap();
            }
        }
        let out = remove_small_subgraphs(&g, min_m);
        for n in out.nodes() {
            prop_assert_eq!(Some(n), g.node(n.id));
        }
        for e in out.edges() {
            prop_assert!(g.edges().contains(e));
        }
        for comp in g.components() {
            let set: BTreeSet<_> = comp.iter().copied().collect();
            let len: f64 = g.edges().iter().filter(|e| set.contains(&e.u)).map(|e| e.length_m).sum();
            prop_assert_eq!(out.node(comp[0]).is_some(), len >= min_m);
        }
    }
}
