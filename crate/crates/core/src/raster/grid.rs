use serde::{Deserialize, Serialize};

use super::GeoTransform;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Probability,
    Binary,
}

/// Geo-registered 2-D scalar field with values in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    width: usize,
    height: usize,
    values: Vec<f32>,
    transform: GeoTransform,
    kind: GridKind,
}

impl RasterGrid {
    pub fn new(
        width: usize,
        height: usize,
        values: Vec<f32>,
        transform: GeoTransform,
        kind: GridKind,
    ) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} values for a {width}x{height} grid",
                values.len()
            )));
        }
        transform.validate()?;
        for (i, &v) in values.iter().enumerate() {
            let ok = match kind {
                GridKind::Probability => v.is_finite() && (0.0..=1.0).contains(&v),
                GridKind::Binary => v == 0.0 || v == 1.0,
            };
            if !ok {
                return Err(Error::Precondition {
                    row: i / width.max(1),
                    col: i % width.max(1),
                    reason: format!("value {v} is not valid for a {kind:?} grid"),
                });
            }
        }
        Ok(RasterGrid {
            width,
            height,
            values,
            transform,
            kind,
        })
    }

    pub fn filled(
        width: usize,
        height: usize,
        value: f32,
        transform: GeoTransform,
        kind: GridKind,
    ) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], transform, kind)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn transform(&self) -> &GeoTransform {
        &self.transform
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width + col]
    }

    pub fn expect_kind(&self, expected: GridKind) -> Result<()> {
        if self.kind != expected {
            return Err(Error::Kind {
                expected,
                found: self.kind,
            });
        }
        Ok(())
    }

    /// Foreground mask of a binary grid.
    pub fn to_mask(&self) -> Result<Mask> {
        self.expect_kind(GridKind::Binary)?;
        Ok(Mask {
            width: self.width,
            height: self.height,
            data: self.values.iter().map(|&v| u8::from(v != 0.0)).collect(),
        })
    }

    /// Copies the window `[row0, row0+rows) x [col0, col0+cols)`.
    pub fn crop(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Result<RasterGrid> {
        if row0 + rows > self.height || col0 + cols > self.width {
            return Err(Error::Dimension(format!(
                "window {rows}x{cols} at ({row0}, {col0}) exceeds {}x{} grid",
                self.height, self.width
            )));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for r in row0..row0 + rows {
            let start = r * self.width + col0;
            values.extend_from_slice(&self.values[start..start + cols]);
        }
        Ok(RasterGrid {
            width: cols,
            height: rows,
            values,
            transform: self.transform.window(row0, col0),
            kind: self.kind,
        })
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        values: Vec<f32>,
        transform: GeoTransform,
        kind: GridKind,
    ) -> Self {
        debug_assert_eq!(values.len(), width * height);
        RasterGrid {
            width,
            height,
            values,
            transform,
            kind,
        }
    }
}

/// Compact binary plane (one byte per pixel, 0 or 1) used by the cleaning,
/// thinning and tracing stages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(u8::from(f(r, c)));
            }
        }
        Mask {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col] != 0
    }

    /// Out-of-bounds reads are background.
    #[inline]
    pub fn get_signed(&self, row: isize, col: isize) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.height
            && (col as usize) < self.width
            && self.data[row as usize * self.width + col as usize] != 0
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.data[row * self.width + col] = u8::from(on);
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn into_grid(self, transform: GeoTransform) -> RasterGrid {
        let values = self.data.into_iter().map(f32::from).collect();
        RasterGrid::from_parts_unchecked(
            self.width,
            self.height,
            values,
            transform,
            GridKind::Binary,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length_and_out_of_range() {
        let t = GeoTransform::identity();
        assert!(matches!(
            RasterGrid::new(2, 2, vec![0.0; 3], t, GridKind::Probability),
            Err(Error::Dimension(_))
        ));
        assert!(RasterGrid::new(1, 1, vec![1.5], t, GridKind::Probability).is_err());
        assert!(RasterGrid::new(1, 1, vec![f32::NAN], t, GridKind::Probability).is_err());
        assert!(RasterGrid::new(1, 1, vec![0.5], t, GridKind::Binary).is_err());
    }

    #[test]
    fn crop_keeps_georegistration() {
        let t = GeoTransform::north_up(10.0, 20.0, 0.3).unwrap();
        let vals: Vec<f32> = (0..20).map(|i| i as f32 / 20.0).collect();
        let g = RasterGrid::new(5, 4, vals, t, GridKind::Probability).unwrap();
        let w = g.crop(1, 2, 2, 3).unwrap();
        assert_eq!(w.get(0, 0), g.get(1, 2));
        assert_eq!(w.get(1, 2), g.get(2, 4));
        assert_eq!(
            w.transform().pixel_to_geo(0.0, 0.0),
            t.pixel_to_geo(1.0, 2.0)
        );
    }
}
