//! Mask cleaning and the untiled mask-to-graph pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{refine, trace_mask, RefineParams, RoadNetwork};
use crate::raster::{
    morph_mask, skeletonize_mask, smooth_mask, threshold_values, GeoTransform, GridKind, Mask,
    MorphOp, RasterGrid,
};

/// Threshold, opening, closing and smoothing, in that order. A radius of 0
/// skips its step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanParams {
    pub threshold: f64,
    pub open_radius: usize,
    pub close_radius: usize,
    pub smooth_radius: usize,
}

impl Default for CleanParams {
    fn default() -> Self {
        CleanParams {
            threshold: 0.3,
            open_radius: 2,
            close_radius: 2,
            smooth_radius: 1,
        }
    }
}

impl CleanParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::param(
                "threshold",
                format!("{} is outside [0, 1]", self.threshold),
            ));
        }
        Ok(())
    }
}

/// Cleans an already-thresholded mask.
pub fn clean_binary_mask(mask: Mask, p: &CleanParams) -> Mask {
    let mut m = mask;
    if p.open_radius > 0 {
        m = morph_mask(&m, MorphOp::Open, p.open_radius);
    }
    if p.close_radius > 0 {
        m = morph_mask(&m, MorphOp::Close, p.close_radius);
    }
    if p.smooth_radius > 0 {
        m = smooth_mask(&m, p.smooth_radius);
    }
    m
}

pub fn clean_values(values: &[f32], width: usize, height: usize, p: &CleanParams) -> Result<Mask> {
    p.validate()?;
    Ok(clean_binary_mask(
        threshold_values(values, width, height, p.threshold),
        p,
    ))
}

/// Probability grid to cleaned binary grid.
pub fn clean(prob: &RasterGrid, p: &CleanParams) -> Result<RasterGrid> {
    prob.expect_kind(GridKind::Probability)?;
    let mask = clean_values(prob.values(), prob.width(), prob.height(), p)?;
    Ok(mask.into_grid(*prob.transform()))
}

/// Skeletonize, trace and refine a cleaned mask.
pub fn mask_to_graph(
    mask: &Mask,
    transform: &GeoTransform,
    refine_params: &RefineParams,
) -> Result<RoadNetwork> {
    refine_params.validate()?;
    let skeleton = skeletonize_mask(mask);
    let traced = trace_mask(&skeleton, transform)?;
    refine(&traced.network, refine_params)
}

/// Whole pipeline on a probability grid that fits in one piece.
pub fn extract_small(
    prob: &RasterGrid,
    clean_params: &CleanParams,
    refine_params: &RefineParams,
) -> Result<RoadNetwork> {
    prob.expect_kind(GridKind::Probability)?;
    let mask = clean_values(prob.values(), prob.width(), prob.height(), clean_params)?;
    mask_to_graph(&mask, prob.transform(), refine_params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noisy_bar_becomes_one_edge() {
        // A 9-px bar of probability 0.8 with scattered speckle at 0.9.
        let (w, h) = (400, 60);
        let mut values = vec![0.05f32; w * h];
        for r in 26..35 {
            for c in 20..380 {
                values[r * w + c] = 0.8;
            }
        }
        for k in 0..40 {
            values[(k * 7919) % (w * h)] = 0.9;
        }
        let t = GeoTransform::north_up(0.0, 0.0, 0.3).unwrap();
        let grid = RasterGrid::new(w, h, values, t, GridKind::Probability).unwrap();
        let g = extract_small(&grid, &CleanParams::default(), &RefineParams::default()).unwrap();
        assert_eq!(
            (g.node_count(), g.edge_count()),
            (2, 1),
            "{:?}",
            g.degree_multiset()
        );
        let len = g.edges()[0].length_m;
        // Thinning retracts each end by about the bar half-width.
        assert!((len - 351.0 * 0.3).abs() < 2.0, "{len}");
    }

    #[test]
    fn zero_radius_skips_step() {
        let mut m = Mask::new(9, 9);
        m.set(4, 4, true);
        let p = CleanParams {
            open_radius: 0,
            close_radius: 0,
            smooth_radius: 0,
            ..Default::default()
        };
        assert_eq!(clean_binary_mask(m.clone(), &p), m);
        assert_eq!(clean_binary_mask(m, &CleanParams::default()).count(), 0);
    }

    #[test]
    fn bad_threshold() {
        let p = CleanParams {
            threshold: 1.5,
            ..Default::default()
        };
        assert!(matches!(
            clean_values(&[0.0], 1, 1, &p),
            Err(Error::Parameter { .. })
        ));
    }
}
