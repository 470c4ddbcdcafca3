//! Road-network extraction from probability masks, graph refinement, tiled
//! large-raster processing, graph similarity metrics and routing.

pub mod config;
pub mod error;
pub mod fixture;
pub mod geojson;
pub mod geometry;
pub mod graph;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod routing;
pub mod tiling;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use fixture::{make_fixture, Fixture, FixtureKind, FixtureParams};
pub use graph::{refine, skeleton_to_graph, Edge, Node, NodeId, RefineParams, RoadNetwork};
pub use metrics::{apls, topo, AplsParams, AplsReport, TopoParams, TopoReport};
pub use pipeline::{clean, extract_small, CleanParams};
pub use raster::{GeoTransform, GridKind, Mask, RasterGrid, VectorRoadSet};
pub use routing::{nearest_node, shortest_route, Route};
pub use tiling::{
    extract_large, merge_tiles, plan_tiles, LargeParams, Tile, TileProvider, TileScheme,
};
