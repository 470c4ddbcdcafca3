//! Overlapping window layout, per-window merging and the large-raster pipeline.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{RefineParams, RoadNetwork};
use crate::pipeline::{clean_binary_mask, mask_to_graph, CleanParams};
use crate::raster::{io::read_grid_file, GeoTransform, GridKind, Mask, RasterGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tile {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Tile {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row0..self.row0 + self.rows).contains(&row)
            && (self.col0..self.col0 + self.cols).contains(&col)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileScheme {
    pub width: usize,
    pub height: usize,
    pub window_px: usize,
    pub overlap_px: usize,
    /// Row-major by origin.
    pub tiles: Vec<Tile>,
}

impl TileScheme {
    /// Number of tiles covering each pixel, row-major.
    pub fn coverage(&self) -> Vec<u16> {
        let mut cov = vec![0u16; self.width * self.height];
        for t in &self.tiles {
            for r in t.row0..t.row0 + t.rows {
                for v in &mut cov[r * self.width + t.col0..r * self.width + t.col0 + t.cols] {
                    *v += 1;
                }
            }
        }
        cov
    }
}

fn axis_origins(extent: usize, window: usize, stride: usize) -> Vec<usize> {
    if window >= extent {
        return vec![0];
    }
    let mut out = Vec::new();
    let mut o = 0;
    while o + window < extent {
        out.push(o);
        o += stride;
    }
    out.push(extent - window);
    out.dedup();
    out
}

/// Windows advance by `window - overlap`; the last window on each axis is
/// shifted inward to end at the extent edge. A window larger than the extent
/// shrinks to it.
pub fn plan_tiles(
    width: usize,
    height: usize,
    window_px: usize,
    overlap_px: usize,
) -> Result<TileScheme> {
    if window_px == 0 {
        return Err(Error::param("window_px", "must be at least 1"));
    }
    if overlap_px >= window_px {
        return Err(Error::param(
            "overlap_px",
            format!("{overlap_px} must be below window_px {window_px}"),
        ));
    }
    if width == 0 || height == 0 {
        return Err(Error::Dimension(format!(
            "cannot tile an empty {width}x{height} extent"
        )));
    }
    let stride = window_px - overlap_px;
    // Per-pixel coverage is at most ceil(window / stride) per axis.
    let per_axis = window_px.div_ceil(stride);
    if per_axis * per_axis > u16::MAX as usize {
        return Err(Error::param(
            "overlap_px",
            "overlap too large: per-pixel tile coverage exceeds 65535",
        ));
    }
    let rows = axis_origins(height, window_px, stride);
    let cols = axis_origins(width, window_px, stride);
    let mut tiles = Vec::with_capacity(rows.len() * cols.len());
    for &row0 in &rows {
        for &col0 in &cols {
            tiles.push(Tile {
                row0,
                col0,
                rows: window_px.min(height),
                cols: window_px.min(width),
            });
        }
    }
    Ok(TileScheme {
        width,
        height,
        window_px,
        overlap_px,
        tiles,
    })
}

/// Per-pixel arithmetic mean of the model values, independent of model order.
pub fn merge_models(models: &[&[f32]]) -> Vec<f32> {
    let n = models[0].len();
    let mut out = Vec::with_capacity(n);
    let mut buf = vec![0f32; models.len()];
    for i in 0..n {
        for (b, m) in buf.iter_mut().zip(models) {
            *b = m[i];
        }
        buf.sort_by(f32::total_cmp);
        let sum: f64 = buf.iter().map(|&v| f64::from(v)).sum();
        out.push((sum / buf.len() as f64) as f32);
    }
    out
}

/// Global mask built from merged tiles: a running mean (f32) plus a coverage
/// count (u16) per pixel. Folding tiles in a fixed order makes the result
/// independent of arrival order, and equal overlapping values merge back
/// exactly.
#[derive(Debug)]
pub struct MaskAccumulator {
    width: usize,
    height: usize,
    mean: Vec<f32>,
    count: Vec<u16>,
}

impl MaskAccumulator {
    pub fn new(width: usize, height: usize) -> Self {
        MaskAccumulator {
            width,
            height,
            mean: vec![0.0; width * height],
            count: vec![0; width * height],
        }
    }

    pub fn add(&mut self, tile: &Tile, values: &[f32]) -> Result<()> {
        if tile.row0 + tile.rows > self.height || tile.col0 + tile.cols > self.width {
            return Err(Error::Dimension(format!(
                "tile at ({}, {}) exceeds the extent",
                tile.row0, tile.col0
            )));
        }
        if values.len() != tile.rows * tile.cols {
            return Err(Error::Dimension(format!(
                "tile at ({}, {}) has {} values, expected {}x{}",
                tile.row0,
                tile.col0,
                values.len(),
                tile.rows,
                tile.cols
            )));
        }
        let w = self.width;
        self.mean
            .par_chunks_mut(w)
            .zip(self.count.par_chunks_mut(w))
            .skip(tile.row0)
            .take(tile.rows)
            .enumerate()
            .for_each(|(r, (mean, count))| {
                let src = &values[r * tile.cols..(r + 1) * tile.cols];
                let mean = &mut mean[tile.col0..tile.col0 + tile.cols];
                let count = &mut count[tile.col0..tile.col0 + tile.cols];
                for ((m, c), &v) in mean.iter_mut().zip(count.iter_mut()).zip(src) {
                    *c += 1;
                    *m += (v - *m) / f32::from(*c);
                }
            });
        Ok(())
    }

    fn check_covered(&self) -> Result<()> {
        match self.count.iter().position(|&c| c == 0) {
            Some(i) => Err(Error::Internal(format!(
                "pixel (row {}, col {}) is not covered by any tile",
                i / self.width,
                i % self.width
            ))),
            None => Ok(()),
        }
    }

    pub fn into_values(self) -> Result<Vec<f32>> {
        self.check_covered()?;
        Ok(self.mean)
    }

    /// Thresholds the merged mask, releasing the float planes.
    pub fn into_mask(self, t: f64) -> Result<Mask> {
        self.check_covered()?;
        let data = self
            .mean
            .par_iter()
            .map(|&v| u8::from(f64::from(v) >= t))
            .collect();
        Ok(Mask {
            width: self.width,
            height: self.height,
            data,
        })
    }
}

/// Merges per-tile model predictions into one normalized probability grid.
pub fn merge_tiles(
    tile_masks: &[(Tile, Vec<RasterGrid>)],
    scheme: &TileScheme,
    n_models: usize,
    transform: &GeoTransform,
) -> Result<RasterGrid> {
    let mut sorted: Vec<&(Tile, Vec<RasterGrid>)> = tile_masks.iter().collect();
    sorted.sort_by_key(|(t, _)| *t);
    let mut acc = MaskAccumulator::new(scheme.width, scheme.height);
    for (tile, grids) in sorted {
        let merged =
            merge_tile(tile, grids, n_models).map_err(|e| e.in_tile(tile.row0, tile.col0))?;
        acc.add(tile, &merged)?;
    }
    let values = acc.into_values()?;
    RasterGrid::new(
        scheme.width,
        scheme.height,
        values,
        *transform,
        GridKind::Probability,
    )
}

fn merge_tile(tile: &Tile, grids: &[RasterGrid], n_models: usize) -> Result<Vec<f32>> {
    if grids.len() != n_models || n_models == 0 {
        return Err(Error::Dimension(format!(
            "expected {n_models} model grids, got {}",
            grids.len()
        )));
    }
    for g in grids {
        g.expect_kind(GridKind::Probability)?;
        if (g.height(), g.width()) != (tile.rows, tile.cols) {
            return Err(Error::Dimension(format!(
                "grid is {}x{}, tile is {}x{}",
                g.height(),
                g.width(),
                tile.rows,
                tile.cols
            )));
        }
    }
    let slices: Vec<&[f32]> = grids.iter().map(|g| g.values()).collect();
    Ok(merge_models(&slices))
}

/// Source of per-tile, per-model probability values (row-major, tile shape).
pub trait TileProvider: Sync {
    fn n_models(&self) -> usize;
    fn tile(&self, tile: &Tile, model: usize) -> Result<Vec<f32>>;
}

/// Serves windows of an in-memory probability grid, one model.
pub struct GridProvider<'a>(pub &'a RasterGrid);

impl TileProvider for GridProvider<'_> {
    fn n_models(&self) -> usize {
        1
    }

    fn tile(&self, tile: &Tile, _model: usize) -> Result<Vec<f32>> {
        Ok(self
            .0
            .crop(tile.row0, tile.col0, tile.rows, tile.cols)?
            .into_values())
    }
}

/// Tiles stored as `tile_{row0}_{col0}_{model}.rgf` (or `.pgm`) in a directory.
#[derive(Debug, Clone)]
pub struct DirProvider {
    files: BTreeMap<(usize, usize, usize), PathBuf>,
    n_models: usize,
    extent: (usize, usize),
    transform: Option<GeoTransform>,
}

fn parse_tile_name(name: &str) -> Option<(usize, usize, usize)> {
    let stem = name
        .strip_suffix(".rgf")
        .or_else(|| name.strip_suffix(".pgm"))?;
    let mut parts = stem.strip_prefix("tile_")?.split('_');
    let r = parts.next()?.parse().ok()?;
    let c = parts.next()?.parse().ok()?;
    let m = parts.next()?.parse().ok()?;
    parts.next().is_none().then_some((r, c, m))
}

impl DirProvider {
    /// Scans `dir`. The extent is derived from the tile origins and the shape
    /// of the last tile; the geotransform comes from the origin tile's world
    /// file when present.
    pub fn open(dir: &Path) -> Result<Self> {
        let mut files = BTreeMap::new();
        for entry in std::fs::read_dir(dir)? {
            let entry = entry?;
            let name = entry.file_name();
            if let Some(key) = name.to_str().and_then(parse_tile_name) {
                if files.insert(key, entry.path()).is_some() {
                    return Err(Error::Data(format!(
                        "duplicate tile {key:?} in {}",
                        dir.display()
                    )));
                }
            }
        }
        if files.is_empty() {
            return Err(Error::Data(format!(
                "no tile_{{row0}}_{{col0}}_{{model}} files in {}",
                dir.display()
            )));
        }
        let n_models = files.keys().map(|k| k.2).max().unwrap() + 1;
        let (r_max, c_max) = files
            .keys()
            .fold((0, 0), |acc, k| (acc.0.max(k.0), acc.1.max(k.1)));
        let probe = files.get(&(r_max, c_max, 0)).ok_or_else(|| {
            Error::Data(format!(
                "bottom-right tile ({r_max}, {c_max}) model 0 is missing"
            ))
        })?;
        let g = read_grid_file(probe, GridKind::Probability, GeoTransform::identity())?;
        let extent = (r_max + g.height(), c_max + g.width());
        let transform = files
            .get(&(0, 0, 0))
            .map(|p| crate::raster::world_file_path(p))
            .filter(|w| w.exists())
            .map(|w| GeoTransform::read_world_file(&w))
            .transpose()?;
        Ok(DirProvider {
            files,
            n_models,
            extent,
            transform,
        })
    }

    /// `(height, width)` of the full raster.
    pub fn extent(&self) -> (usize, usize) {
        self.extent
    }

    pub fn transform(&self) -> Option<GeoTransform> {
        self.transform
    }
}

impl TileProvider for DirProvider {
    fn n_models(&self) -> usize {
        self.n_models
    }

    fn tile(&self, tile: &Tile, model: usize) -> Result<Vec<f32>> {
        let path = self
            .files
            .get(&(tile.row0, tile.col0, model))
            .ok_or_else(|| Error::Data(format!("missing tile file for model {model}")))?;
        let g = read_grid_file(path, GridKind::Probability, GeoTransform::identity())?;
        if (g.height(), g.width()) != (tile.rows, tile.cols) {
            return Err(Error::Dimension(format!(
                "{} is {}x{}, planned tile is {}x{}",
                path.display(),
                g.height(),
                g.width(),
                tile.rows,
                tile.cols
            )));
        }
        Ok(g.into_values())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargeParams {
    pub window_px: usize,
    pub overlap_px: usize,
    pub clean: CleanParams,
    pub refine: RefineParams,
}

impl Default for LargeParams {
    fn default() -> Self {
        LargeParams {
            window_px: 1300,
            overlap_px: 260,
            clean: CleanParams::default(),
            refine: RefineParams::default(),
        }
    }
}

/// Plans tiles, pulls and merges them, then thresholds the merged mask.
/// Tiles are fetched in parallel batches and folded in plan order.
pub fn stitch_mask(
    provider: &dyn TileProvider,
    width: usize,
    height: usize,
    p: &LargeParams,
) -> Result<Mask> {
    p.clean.validate()?;
    let scheme = plan_tiles(width, height, p.window_px, p.overlap_px)?;
    let n_models = provider.n_models();
    if n_models == 0 {
        return Err(Error::param("n_models", "provider has no models"));
    }
    let mut acc = MaskAccumulator::new(width, height);
    let batch = rayon::current_num_threads().max(1) * 2;
    for chunk in scheme.tiles.chunks(batch) {
        let merged: Vec<Result<Vec<f32>>> = chunk
            .par_iter()
            .map(|tile| {
                let models = (0..n_models)
                    .map(|m| {
                        let v = provider.tile(tile, m)?;
                        check_tile_values(tile, &v)?;
                        Ok(v)
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| e.in_tile(tile.row0, tile.col0))?;
                let slices: Vec<&[f32]> = models.iter().map(|v| v.as_slice()).collect();
                Ok(merge_models(&slices))
            })
            .collect();
        for (tile, values) in chunk.iter().zip(merged) {
            acc.add(tile, &values?)?;
        }
    }
    acc.into_mask(p.clean.threshold)
}

fn check_tile_values(tile: &Tile, v: &[f32]) -> Result<()> {
    if v.len() != tile.rows * tile.cols {
        return Err(Error::Dimension(format!(
            "provider returned {} values for a {}x{} tile",
            v.len(),
            tile.rows,
            tile.cols
        )));
    }
    if let Some(i) = v.iter().position(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::Precondition {
            row: tile.row0 + i / tile.cols,
            col: tile.col0 + i % tile.cols,
            reason: format!("probability {} outside [0, 1]", v[i]),
        });
    }
    Ok(())
}

/// Full large-raster pipeline: stitch, clean, skeletonize, trace, refine.
pub fn extract_large(
    provider: &dyn TileProvider,
    width: usize,
    height: usize,
    transform: &GeoTransform,
    p: &LargeParams,
) -> Result<RoadNetwork> {
    transform.validate()?;
    let mask = stitch_mask(provider, width, height, p)?;
    let mask = clean_binary_mask(mask, &p.clean);
    mask_to_graph(&mask, transform, &p.refine)
}
