//! Mask cleaning: thresholding, disk-shaped binary morphology and median smoothing.
//!
//! Disk structuring elements are decomposed into one horizontal run per row
//! offset, so each output pixel costs `2r + 1` prefix-sum lookups. Pixels
//! outside the image count as background.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GridKind, Mask, RasterGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphOp {
    Open,
    Close,
}

/// Half-width of the disk's horizontal run at each row offset `-r..=r`.
fn disk_runs(radius: usize) -> Vec<usize> {
    let r = radius as i64;
    (-r..=r)
        .map(|dy| {
            let mut w = 0i64;
            while (w + 1) * (w + 1) + dy * dy <= r * r {
                w += 1;
            }
            w as usize
        })
        .collect()
}

fn prefix_row(row: &[u8], prefix: &mut [u32]) {
    prefix[0] = 0;
    let mut acc = 0u32;
    for (i, &v) in row.iter().enumerate() {
        acc += u32::from(v);
        prefix[i + 1] = acc;
    }
}

#[derive(Clone, Copy)]
enum Reduce {
    Erode,
    Dilate,
}

fn disk_filter(mask: &Mask, radius: usize, reduce: Reduce) -> Mask {
    let (w, h) = (mask.width, mask.height);
    let mut out = Mask::new(w, h);
    if w == 0 || h == 0 {
        return out;
    }
    let runs = disk_runs(radius);
    let r = radius as isize;
    out.data.par_chunks_mut(w).enumerate().for_each_init(
        || vec![vec![0u32; w + 1]; runs.len()],
        |prefixes, (y, out_row)| {
            let mut row_ok = vec![true; runs.len()];
            for (k, dy) in (-r..=r).enumerate() {
                let sy = y as isize + dy;
                if sy < 0 || sy >= h as isize {
                    row_ok[k] = false;
                    continue;
                }
                let sy = sy as usize;
                prefix_row(&mask.data[sy * w..(sy + 1) * w], &mut prefixes[k]);
            }
            match reduce {
                Reduce::Erode => {
                    if row_ok.iter().any(|ok| !ok) {
                        return;
                    }
                    for x in 0..w {
                        let all = runs.iter().enumerate().all(|(k, &hw)| {
                            x >= hw && x + hw < w && {
                                let p = &prefixes[k];
                                (p[x + hw + 1] - p[x - hw]) as usize == 2 * hw + 1
                            }
                        });
                        out_row[x] = u8::from(all);
                    }
                }
                Reduce::Dilate => {
                    for x in 0..w {
                        let any = runs.iter().enumerate().any(|(k, &hw)| {
                            row_ok[k] && {
                                let p = &prefixes[k];
                                let lo = x.saturating_sub(hw);
                                let hi = (x + hw + 1).min(w);
                                p[hi] > p[lo]
                            }
                        });
                        out_row[x] = u8::from(any);
                    }
                }
            }
        },
    );
    out
}

pub fn erode_mask(mask: &Mask, radius: usize) -> Mask {
    disk_filter(mask, radius, Reduce::Erode)
}

pub fn dilate_mask(mask: &Mask, radius: usize) -> Mask {
    disk_filter(mask, radius, Reduce::Dilate)
}

pub fn morph_mask(mask: &Mask, op: MorphOp, radius: usize) -> Mask {
    match op {
        MorphOp::Open => dilate_mask(&erode_mask(mask, radius), radius),
        MorphOp::Close => erode_mask(&dilate_mask(mask, radius), radius),
    }
}

/// Disk median filter with a truncated neighborhood at the border; an even
/// split votes foreground.
pub fn smooth_mask(mask: &Mask, radius: usize) -> Mask {
    let (w, h) = (mask.width, mask.height);
    let mut out = Mask::new(w, h);
    if w == 0 || h == 0 {
        return out;
    }
    let runs = disk_runs(radius);
    let r = radius as isize;
    out.data.par_chunks_mut(w).enumerate().for_each_init(
        || vec![vec![0u32; w + 1]; runs.len()],
        |prefixes, (y, out_row)| {
            let mut live = vec![false; runs.len()];
            for (k, dy) in (-r..=r).enumerate() {
                let sy = y as isize + dy;
                if sy >= 0 && sy < h as isize {
                    live[k] = true;
                    let sy = sy as usize;
                    prefix_row(&mask.data[sy * w..(sy + 1) * w], &mut prefixes[k]);
                }
            }
            for x in 0..w {
                let mut ones = 0usize;
                let mut n = 0usize;
                for (k, &hw) in runs.iter().enumerate() {
                    if !live[k] {
                        continue;
                    }
                    let lo = x.saturating_sub(hw);
                    let hi = (x + hw + 1).min(w);
                    ones += (prefixes[k][hi] - prefixes[k][lo]) as usize;
                    n += hi - lo;
                }
                out_row[x] = u8::from(2 * ones >= n);
            }
        },
    );
    out
}

/// Compares in f64 so thresholds not representable in f32 keep their meaning.
pub fn threshold_values(values: &[f32], width: usize, height: usize, t: f64) -> Mask {
    Mask {
        width,
        height,
        data: values
            .par_iter()
            .map(|&v| u8::from(f64::from(v) >= t))
            .collect(),
    }
}

fn check_radius(radius_px: usize) -> Result<()> {
    if radius_px < 1 {
        return Err(Error::param("radius_px", "must be at least 1"));
    }
    Ok(())
}

/// `out = 1` where `grid >= t`.
pub fn threshold(grid: &RasterGrid, t: f64) -> Result<RasterGrid> {
    grid.expect_kind(GridKind::Probability)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::param("t", format!("{t} is outside [0, 1]")));
    }
    let mask = threshold_values(grid.values(), grid.width(), grid.height(), t);
    Ok(mask.into_grid(*grid.transform()))
}

pub fn morph(binary: &RasterGrid, op: MorphOp, radius_px: usize) -> Result<RasterGrid> {
    check_radius(radius_px)?;
    let mask = binary.to_mask()?;
    Ok(morph_mask(&mask, op, radius_px).into_grid(*binary.transform()))
}

pub fn smooth(binary: &RasterGrid, radius_px: usize) -> Result<RasterGrid> {
    check_radius(radius_px)?;
    let mask = binary.to_mask()?;
    Ok(smooth_mask(&mask, radius_px).into_grid(*binary.transform()))
}
