//! Topology-driven adversarial point clouds.
//!
//! The crate computes differentiable persistent homology of alpha complexes,
//! optimizes a joint classification / topology / geometry objective with
//! projected gradient descent, and evaluates attack success and
//! imperceptibility.

// Index loops mirror the math; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod classifier;
pub mod data_io;
pub mod delaunay;
pub mod error;
pub mod geo_loss;
pub mod grad;
pub mod metrics;
mod par;
pub mod persistence;
pub mod pointcloud;
pub mod topo_loss;
pub mod vec3;

pub use error::{Error, Result};
pub use pointcloud::PointCloud;
