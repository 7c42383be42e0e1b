//! Synthetic shapes, mesh ingestion and on-disk formats.

mod dataset;
mod files;
mod mesh;
mod shapes;

pub use dataset::{generate_dataset, write_dataset, DatasetConfig, Sample};
pub use files::{format_diagram, format_xyz, load_cloud, parse_xyz, save_cloud, DatasetManifest, ManifestEntry, Split};
pub use mesh::{load_mesh, parse_off, parse_ply, sample_surface, Mesh, MeshFormat};
pub use shapes::{generate_shape, normalize_unit_sphere, scale_to_unit, Family, Shape, ShapeSpec, MIN_POINTS};
