//! Raster representation, label rasterization, mask cleaning and thinning.

mod geo;
mod grid;
pub mod io;
mod loss;
mod morphology;
mod rasterize;
mod skeleton;

pub use geo::{world_file_path, GeoTransform};
pub use grid::{GridKind, Mask, RasterGrid};
pub use loss::{combined_loss, LossWeights};
pub use morphology::{
    dilate_mask, erode_mask, morph, morph_mask, smooth, smooth_mask, threshold, threshold_values,
    MorphOp,
};
pub use rasterize::{rasterize_centerlines, RoadLine, VectorRoadSet};
pub use skeleton::{component_count, find_block, skeletonize, skeletonize_mask};
