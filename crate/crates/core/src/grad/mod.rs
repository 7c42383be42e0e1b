//! Analytic gradients from diagram coordinates and PCA features back to points.

pub mod circumradius;
mod dd;
pub mod eigen;
mod vjp;

pub(crate) use circumradius::sliver_circumsphere;
pub use circumradius::{circumradius_grad, circumsphere, Circumsphere};
pub use eigen::{eigen_grads, EigenSelection, GapTooSmall, SymEigen};
pub use vjp::{critical_map, diagram_vjp, CriticalMap, GradField};
