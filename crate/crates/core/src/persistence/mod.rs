//! Alpha filtrations, Z/2 persistence and diagram statistics.

mod diagram;
mod filtration;
mod reduction;

pub use diagram::{
    entropy_of_lifetimes, persistence_entropy, top_k_lifetimes, PersistenceDiagram, PersistencePair, TopFeature,
};
pub use filtration::{alpha_filtration, FilteredSimplex, Filtration};
pub use reduction::compute_persistence;

use crate::delaunay::delaunay;
use crate::error::Result;
use crate::vec3::Vec3;

/// Triangulation, filtration and diagram of a point set in one call.
pub fn diagram_of(points: &[Vec3], perturb_seed: u64) -> Result<(Filtration, PersistenceDiagram)> {
    let tri = delaunay(points, perturb_seed)?;
    let filt = alpha_filtration(&tri)?;
    let dgm = compute_persistence(&filt);
    Ok((filt, dgm))
}
