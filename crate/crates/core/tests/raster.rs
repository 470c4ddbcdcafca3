mod common;

use proptest::prelude::*;
use roadgraph_core::raster::{
    component_count, find_block, morph, rasterize_centerlines, skeletonize, skeletonize_mask,
    smooth, threshold, MorphOp, RoadLine,
};
use roadgraph_core::{GeoTransform, GridKind, Mask, RasterGrid, VectorRoadSet};

use common::point_segment_distance;

fn transform_strategy() -> impl Strategy<Value = GeoTransform> {
    (0.1f64..2.0, -1000.0f64..1000.0, -1000.0f64..1000.0)
        .prop_map(|(px, x0, y0)| GeoTransform::north_up(x0, y0, px).unwrap())
}

fn roads_strategy() -> impl Strategy<Value = Vec<Vec<(f64, f64)>>> {
    // Polylines in pixel units (col, row), mapped through the transform later.
    prop::collection::vec(
        prop::collection::vec((-8.0f64..72.0, -8.0f64..72.0), 2..5),
        0..4,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rasterize_matches_distance_oracle(
        t in transform_strategy(),
        lines in roads_strategy(),
        w in 1usize..=64,
        h in 1usize..=64,
        halfwidth_px in 0.3f64..6.0,
    ) {
        let lines: Vec<RoadLine> = lines
            .into_iter()
            .filter_map(|pts| {
                let mut geo: Vec<[f64; 2]> = pts.iter().map(|&(c, r)| t.pixel_to_geo(r, c)).collect();
                geo.dedup();
                RoadLine::new(geo).ok()
            })
            .collect();
        let roads = VectorRoadSet::new(lines).unwrap();
        let halfwidth_m = halfwidth_px * t.pixel_size();
        let grid = rasterize_centerlines(&roads, w, h, &t, halfwidth_m).unwrap();
        prop_assert_eq!(*grid.transform(), t);
        for r in 0..h {
            for c in 0..w {
                let p = t.pixel_to_geo(r as f64, c as f64);
                let d = roads
                    .lines
                    .iter()
                    .flat_map(|l| l.points.windows(2).map(move |s| point_segment_distance(p, s[0], s[1])))
                    .fold(f64::INFINITY, f64::min);
                // Pixels within rounding of the boundary may go either way.
                if (d - halfwidth_m).abs() > 1e-9 * halfwidth_m.max(1.0) {
                    prop_assert_eq!(grid.get(r, c) == 1.0, d <= halfwidth_m, "pixel ({}, {}) at {} m", r, c, d);
                }
            }
        }
    }

    #[test]
    fn skeleton_invariants(cells in prop::collection::vec(any::<bool>(), 16 * 16), scale in 1usize..=3) {
        // Blocky random shapes: each cell becomes a scale x scale square.
        let n = 16 * scale;
        let m = Mask::from_fn(n, n, |r, c| cells[(r / scale) * 16 + c / scale]);
        let s = skeletonize_mask(&m);
        prop_assert_eq!(component_count(&s), component_count(&m));
        prop_assert_eq!(find_block(&s), None);
        prop_assert_eq!(skeletonize_mask(&s), s.clone());
        // Block repair may move a pixel by one step, never further.
        let near = |r: usize, c: usize| {
            (-1isize..=1).any(|dr| (-1isize..=1).any(|dc| m.get_signed(r as isize + dr, c as isize + dc)))
        };
        prop_assert!((0..n).all(|r| (0..n).all(|c| !s.get(r, c) || near(r, c))));
    }
}

#[test]
fn raster_ops_keep_transform_bitwise() {
    let t = GeoTransform::new(0.3, 0.01, 500000.125, -0.02, -0.3, 4000000.5).unwrap();
    let values: Vec<f32> = (0..40 * 30)
        .map(|i| ((i * 37) % 100) as f32 / 100.0)
        .collect();
    let prob = RasterGrid::new(40, 30, values, t, GridKind::Probability).unwrap();
    let bin = threshold(&prob, 0.4).unwrap();
    assert_eq!(*bin.transform(), t);
    for op in [MorphOp::Open, MorphOp::Close] {
        assert_eq!(*morph(&bin, op, 2).unwrap().transform(), t);
    }
    assert_eq!(*smooth(&bin, 1).unwrap().transform(), t);
    assert_eq!(*skeletonize(&bin).unwrap().transform(), t);
}

/// Golden fixture: two crossing 5-px bars thin to a cross with a single
/// junction cluster.
#[test]
fn plus_sign_thins_to_one_junction() {
    let m = Mask::from_fn(41, 41, |r, c| {
        (18..23).contains(&r) && (4..37).contains(&c)
            || (18..23).contains(&c) && (4..37).contains(&r)
    });
    let s = skeletonize_mask(&m);
    // Arms end unevenly: the south and east ends keep a short diagonal tail.
    let mut expected = Mask::new(41, 41);
    for k in 5..35 {
        expected.set(20, k, true);
    }
    for k in 6..35 {
        expected.set(k, 20, true);
    }
    for (r, c) in [(21, 35), (22, 36), (35, 21), (36, 22)] {
        expected.set(r, c, true);
    }
    let neighbors = |r: usize, c: usize| {
        (-1isize..=1)
            .flat_map(|dr| (-1isize..=1).map(move |dc| (dr, dc)))
            .filter(|&(dr, dc)| {
                (dr, dc) != (0, 0) && s.get_signed(r as isize + dr, c as isize + dc)
            })
            .count()
    };
    let junction: Vec<(usize, usize)> = (0..41)
        .flat_map(|r| (0..41).map(move |c| (r, c)))
        .filter(|&(r, c)| s.get(r, c) && neighbors(r, c) >= 3)
        .collect();
    let ends = (0..41)
        .flat_map(|r| (0..41).map(move |c| (r, c)))
        .filter(|&(r, c)| s.get(r, c) && neighbors(r, c) == 1)
        .count();
    assert_eq!(ends, 4);
    let cluster = Mask::from_fn(41, 41, |r, c| junction.contains(&(r, c)));
    assert_eq!(component_count(&cluster), 1, "{junction:?}");
    assert!(junction
        .iter()
        .all(|&(r, c)| r.abs_diff(20) <= 1 && c.abs_diff(20) <= 1));
    assert_eq!(s, expected);
}
