//! Flat pipeline configuration shared by the library entry points and the CLI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::RefineParams;
use crate::metrics::{AplsParams, TopoParams};
use crate::pipeline::CleanParams;
use crate::tiling::{plan_tiles, LargeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub halfwidth_m: f64,
    pub threshold: f64,
    pub open_radius: usize,
    pub close_radius: usize,
    pub smooth_radius: usize,
    pub min_subgraph_m: f64,
    pub max_spur_px: f64,
    pub max_gap_px: f64,
    pub window_px: usize,
    pub overlap_px: usize,
    pub n_control: usize,
    pub snap_buffer_m: f64,
    pub inject_midpoints: bool,
    pub symmetric: bool,
    pub apls_seed: u64,
    pub hole_size_m: f64,
    pub topo_radius_m: f64,
    pub sample_spacing_m: f64,
    pub seed_spacing_m: f64,
    pub topo_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let c = CleanParams::default();
        let r = RefineParams::default();
        let l = LargeParams::default();
        let a = AplsParams::default();
        let t = TopoParams::default();
        PipelineConfig {
            halfwidth_m: 2.0,
            threshold: c.threshold,
            open_radius: c.open_radius,
            close_radius: c.close_radius,
            smooth_radius: c.smooth_radius,
            min_subgraph_m: r.min_subgraph_m,
            max_spur_px: r.max_spur_px,
            max_gap_px: r.max_gap_px,
            window_px: l.window_px,
            overlap_px: l.overlap_px,
            n_control: a.n_control,
            snap_buffer_m: a.snap_buffer_m,
            inject_midpoints: a.inject_midpoints,
            symmetric: a.symmetric,
            apls_seed: a.rng_seed,
            hole_size_m: t.hole_size_m,
            topo_radius_m: t.radius_m,
            sample_spacing_m: t.sample_spacing_m,
            seed_spacing_m: t.seed_spacing_m,
            topo_seed: t.rng_seed,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let cfg: PipelineConfig =
            serde_json::from_slice(bytes).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn clean(&self) -> CleanParams {
        CleanParams {
            threshold: self.threshold,
            open_radius: self.open_radius,
            close_radius: self.close_radius,
            smooth_radius: self.smooth_radius,
        }
    }

    pub fn refine(&self) -> RefineParams {
        RefineParams {
            min_subgraph_m: self.min_subgraph_m,
            max_spur_px: self.max_spur_px,
            max_gap_px: self.max_gap_px,
        }
    }

    pub fn large(&self) -> LargeParams {
        LargeParams {
            window_px: self.window_px,
            overlap_px: self.overlap_px,
            clean: self.clean(),
            refine: self.refine(),
        }
    }

    pub fn apls(&self) -> AplsParams {
        AplsParams {
            n_control: self.n_control,
            snap_buffer_m: self.snap_buffer_m,
            inject_midpoints: self.inject_midpoints,
            rng_seed: self.apls_seed,
            symmetric: self.symmetric,
        }
    }

    pub fn topo(&self) -> TopoParams {
        TopoParams {
            hole_size_m: self.hole_size_m,
            radius_m: self.topo_radius_m,
            sample_spacing_m: self.sample_spacing_m,
            seed_spacing_m: self.seed_spacing_m,
            rng_seed: self.topo_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.halfwidth_m > 0.0 && self.halfwidth_m.is_finite()) {
            return Err(Error::param("halfwidth_m", "must be positive"));
        }
        self.clean().validate()?;
        self.refine().validate()?;
        plan_tiles(1, 1, self.window_px, self.overlap_px)?;
        self.apls().validate()?;
        self.topo().validate()
    }
}
