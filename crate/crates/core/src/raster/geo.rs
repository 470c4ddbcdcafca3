//! Affine pixel <-> geographic coordinate mapping.
//!
//! Coefficients follow the world-file layout and map the *center* of pixel
//! `(col, row)` to projected coordinates:
//!
//! ```text
//! x = a * col + b * row + c
//! y = d * col + e * row + f
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl GeoTransform {
    /// Builds a transform after checking that it is invertible and finite.
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Result<Self> {
        let t = GeoTransform { a, b, c, d, e, f };
        t.validate()?;
        Ok(t)
    }

    /// North-up transform whose pixel (0, 0) center sits at `(x0, y0)`.
    pub fn north_up(x0: f64, y0: f64, pixel_size: f64) -> Result<Self> {
        Self::new(pixel_size, 0.0, x0, 0.0, -pixel_size, y0)
    }

    /// Pixel coordinates equal geographic coordinates.
    pub fn identity() -> Self {
        GeoTransform {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 0.0,
            e: 1.0,
            f: 0.0,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }

    pub fn validate(&self) -> Result<()> {
        let coeffs = [self.a, self.b, self.c, self.d, self.e, self.f];
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(
                "geotransform has non-finite coefficients".into(),
            ));
        }
        if self.determinant() == 0.0 {
            return Err(Error::Config("geotransform is not invertible".into()));
        }
        Ok(())
    }

    /// Side length of a pixel in geographic units (meters for projected CRSs).
    pub fn pixel_size(&self) -> f64 {
        self.determinant().abs().sqrt()
    }

    /// Geographic position of the center of pixel `(row, col)`.
    pub fn pixel_to_geo(&self, row: f64, col: f64) -> [f64; 2] {
        [
            self.a * col + self.b * row + self.c,
            self.d * col + self.e * row + self.f,
        ]
    }

    /// Inverse of [`pixel_to_geo`](Self::pixel_to_geo); returns `[row, col]`.
    pub fn geo_to_pixel(&self, x: f64, y: f64) -> [f64; 2] {
        let det = self.determinant();
        let dx = x - self.c;
        let dy = y - self.f;
        let col = (self.e * dx - self.b * dy) / det;
        let row = (-self.d * dx + self.a * dy) / det;
        [row, col]
    }

    /// Transform of a window whose pixel (0, 0) is this transform's `(row0, col0)`.
    pub fn window(&self, row0: usize, col0: usize) -> GeoTransform {
        let [c, f] = self.pixel_to_geo(row0 as f64, col0 as f64);
        GeoTransform { c, f, ..*self }
    }

    /// Parses a 6-line world file (`a, d, b, e, c, f`).
    pub fn from_world_file_str(text: &str) -> Result<Self> {
        let values: Vec<f64> = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| Error::Data(format!("world file value {tok:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if values.len() != 6 {
            return Err(Error::Data(format!(
                "world file must have 6 values, found {}",
                values.len()
            )));
        }
        let [a, d, b, e, c, f] = [
            values[0], values[1], values[2], values[3], values[4], values[5],
        ];
        GeoTransform::new(a, b, c, d, e, f)
    }

    pub fn to_world_file_string(&self) -> String {
        let mut out = String::new();
        for v in [self.a, self.d, self.b, self.e, self.c, self.f] {
            let _ = writeln!(out, "{v}");
        }
        out
    }

    pub fn read_world_file(path: &Path) -> Result<Self> {
        Self::from_world_file_str(&fs::read_to_string(path)?)
    }

    pub fn write_world_file(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_world_file_string())?;
        Ok(())
    }
}

/// The `.wld` sidecar path for a raster file.
pub fn world_file_path(raster: &Path) -> PathBuf {
    raster.with_extension("wld")
}
