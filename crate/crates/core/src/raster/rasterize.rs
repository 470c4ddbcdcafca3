use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{GeoTransform, Mask, RasterGrid};
use crate::error::{Error, Result};
use crate::geometry::{project_on_segment, Point};

/// One road centerline in geographic coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoadLine {
    pub points: Vec<Point>,
    pub attributes: BTreeMap<String, String>,
}

impl RoadLine {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let line = RoadLine {
            points,
            attributes: BTreeMap::new(),
        };
        line.validate()?;
        Ok(line)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::Data("polyline needs at least 2 points".into()));
        }
        if let Some(p) = self
            .points
            .iter()
            .find(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(Error::Data(format!("non-finite coordinate {p:?}")));
        }
        if self.points.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Data("polyline repeats a point consecutively".into()));
        }
        Ok(())
    }
}

/// A set of vector road centerlines (the label format masks are rendered from).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorRoadSet {
    pub lines: Vec<RoadLine>,
}

impl VectorRoadSet {
    pub fn new(lines: Vec<RoadLine>) -> Result<Self> {
        for l in &lines {
            l.validate()?;
        }
        Ok(VectorRoadSet { lines })
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

struct Segment {
    a: Point,
    b: Point,
    row_min: usize,
    row_max: usize,
    col_min: usize,
    col_max: usize,
}

/// Burns road centerlines into a binary mask: a pixel is set when the
/// distance from its center to the nearest centerline is at most `halfwidth_m`.
pub fn rasterize_centerlines(
    labels: &VectorRoadSet,
    width: usize,
    height: usize,
    transform: &GeoTransform,
    halfwidth_m: f64,
) -> Result<RasterGrid> {
    transform.validate()?;
    if !(halfwidth_m > 0.0 && halfwidth_m.is_finite()) {
        return Err(Error::param("halfwidth_m", "must be positive and finite"));
    }
    let mut mask = Mask::new(width, height);
    if width == 0 || height == 0 {
        return Ok(mask.into_grid(*transform));
    }

    // Pixel-space bounding boxes of every buffered segment; one pixel of slack
    // absorbs rounding in the inverse transform.
    let mut segments = Vec::new();
    for line in &labels.lines {
        for w in line.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let corners = [
                [a[0].min(b[0]) - halfwidth_m, a[1].min(b[1]) - halfwidth_m],
                [a[0].max(b[0]) + halfwidth_m, a[1].min(b[1]) - halfwidth_m],
                [a[0].min(b[0]) - halfwidth_m, a[1].max(b[1]) + halfwidth_m],
                [a[0].max(b[0]) + halfwidth_m, a[1].max(b[1]) + halfwidth_m],
            ];
            let (mut rmin, mut rmax, mut cmin, mut cmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for c in corners {
                let [r, col] = transform.geo_to_pixel(c[0], c[1]);
                rmin = rmin.min(r);
                rmax = rmax.max(r);
                cmin = cmin.min(col);
                cmax = cmax.max(col);
            }
            let rmin = (rmin.floor() - 1.0).max(0.0);
            let cmin = (cmin.floor() - 1.0).max(0.0);
            let rmax = (rmax.ceil() + 1.0).min(height as f64 - 1.0);
            let cmax = (cmax.ceil() + 1.0).min(width as f64 - 1.0);
            if rmin > rmax || cmin > cmax {
                continue;
            }
            segments.push(Segment {
                a,
                b,
                row_min: rmin as usize,
                row_max: rmax as usize,
                col_min: cmin as usize,
                col_max: cmax as usize,
            });
        }
    }

    mask.data
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(row, out)| {
            for seg in segments
                .iter()
                .filter(|s| s.row_min <= row && row <= s.row_max)
            {
                for col in seg.col_min..=seg.col_max {
                    if out[col] != 0 {
                        continue;
                    }
                    let p = transform.pixel_to_geo(row as f64, col as f64);
                    let (d, _) = project_on_segment(p, seg.a, seg.b);
                    if d <= halfwidth_m {
                        out[col] = 1;
                    }
                }
            }
        });
    Ok(mask.into_grid(*transform))
}
