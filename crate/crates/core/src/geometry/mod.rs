//! Dimension-generic points, clouds, meshes, and grids, plus the shape
//! normalization every other module relies on.

mod cloud;
mod grid;
pub mod io;
mod mesh;
mod point;

pub use cloud::{normalize_cloud, NormTransform, PointCloud, NORM_HALF_EXTENT};
pub use grid::AxisGrid;
pub use mesh::{sample_mesh_surface, TriangleMesh};
pub use point::Point;
