//! Spatial road graphs: construction from skeletons and clean-up.

mod extract;
mod network;
mod refine;
pub mod spatial;

pub use extract::{skeleton_to_graph, trace_mask, Traced};
pub use network::{Edge, Node, NodeId, RoadNetwork, Topology};
pub use refine::{
    connect_terminals, prune_short_spurs, refine, refine_with_order, remove_small_subgraphs,
    RefineParams, RefineStep, DEFAULT_REFINE_ORDER,
};
