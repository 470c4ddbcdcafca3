//! Uniform-grid buckets for radius queries over points and polyline segments.

use std::collections::HashMap;

use crate::geometry::Point;

fn cell_of(p: Point, cell: f64) -> (i64, i64) {
    ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
}

/// Points bucketed by cell; queries return every item whose point may lie
/// within `radius` of the probe.
#[derive(Debug)]
pub struct PointGrid<T> {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<(Point, T)>>,
}

impl<T: Copy> PointGrid<T> {
    pub fn new(cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite());
        PointGrid {
            cell,
            buckets: HashMap::new(),
        }
    }

    pub fn insert(&mut self, p: Point, item: T) {
        self.buckets
            .entry(cell_of(p, self.cell))
            .or_default()
            .push((p, item));
    }

    pub fn near(&self, p: Point, radius: f64) -> impl Iterator<Item = (Point, T)> + '_ {
        let (lo0, lo1) = cell_of([p[0] - radius, p[1] - radius], self.cell);
        let (hi0, hi1) = cell_of([p[0] + radius, p[1] + radius], self.cell);
        (lo0..=hi0)
            .flat_map(move |i| (lo1..=hi1).map(move |j| (i, j)))
            .filter_map(move |k| self.buckets.get(&k))
            .flatten()
            .copied()
    }
}

/// Segments bucketed by the cells along their length, with a one-cell halo.
#[derive(Debug)]
pub struct SegmentGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<(usize, usize)>>,
}

impl SegmentGrid {
    /// Indexes segment `s` of polyline `i` as `(i, s)`.
    pub fn build<'a>(polylines: impl IntoIterator<Item = &'a [Point]>, cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite());
        let mut buckets: HashMap<(i64, i64), Vec<(usize, usize)>> = HashMap::new();
        let mut cells = Vec::new();
        for (i, line) in polylines.into_iter().enumerate() {
            for (s, w) in line.windows(2).enumerate() {
                // Samples every quarter cell: any point of the segment is then
                // within one cell of a sampled cell.
                let len = crate::geometry::dist(w[0], w[1]);
                let steps = (len / (cell * 0.25)).ceil().max(1.0) as usize;
                cells.clear();
                for k in 0..=steps {
                    let (x, y) = cell_of(
                        crate::geometry::lerp(w[0], w[1], k as f64 / steps as f64),
                        cell,
                    );
                    for dx in -1..=1 {
                        for dy in -1..=1 {
                            cells.push((x + dx, y + dy));
                        }
                    }
                }
                cells.sort_unstable();
                cells.dedup();
                for &key in &cells {
                    buckets.entry(key).or_default().push((i, s));
                }
            }
        }
        SegmentGrid { cell, buckets }
    }

    /// Candidate `(polyline, segment)` pairs near `p`, sorted and deduplicated.
    pub fn near(&self, p: Point, radius: f64) -> Vec<(usize, usize)> {
        let (lo0, lo1) = cell_of([p[0] - radius, p[1] - radius], self.cell);
        let (hi0, hi1) = cell_of([p[0] + radius, p[1] + radius], self.cell);
        let mut out = Vec::new();
        for x in lo0..=hi0 {
            for y in lo1..=hi1 {
                if let Some(b) = self.buckets.get(&(x, y)) {
                    out.extend_from_slice(b);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
