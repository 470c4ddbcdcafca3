//! Graph similarity metrics.

mod apls;
pub mod rng;
pub mod snap;
mod topo;

pub use apls::{apls, pair_score, sample_control_nodes, AplsParams, AplsReport};
pub use snap::{inject_midpoints, snap_point, snap_points, SnapHit, SnapIndex, Snapped};
pub use topo::{seed_points, topo, TopoParams, TopoReport};

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Sum {
    sum: f64,
    comp: f64,
}

impl Sum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn merge(&mut self, other: Sum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
