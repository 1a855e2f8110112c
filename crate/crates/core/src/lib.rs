//! Learns the scaled squared distance field (S2DF) of an unoriented point
//! cloud by minimizing a Monge-Ampere residual together with boundary losses,
//! then extracts offset iso-surfaces and scores them.
//!
//! Module map:
//! - [`geometry`]: points, clouds, meshes, grids, normalization, file I/O
//! - [`field`]: sine-activated MLP with exact second-order jet propagation
//! - [`loss`]: the four training losses plus the eikonal ablation variant
//! - [`sampler`]: surface / off-surface batch sampling
//! - [`train`]: Adam, the step-decay schedule, the training loop
//! - [`extract`]: grid evaluation, marching squares / cubes, offset shells
//! - [`metrics`]: chamfer distance, normal consistency, F-score
//! - [`oracle`]: analytic distance-field jets and finite-difference checks

pub mod error;
pub mod extract;
pub mod field;
pub mod geometry;
pub mod loss;
pub mod metrics;
pub mod oracle;
pub mod sampler;
pub mod train;

pub use error::{Error, Result};
pub use field::{Jet2, SirenNet};
pub use geometry::{AxisGrid, NormTransform, Point, PointCloud, TriangleMesh};
