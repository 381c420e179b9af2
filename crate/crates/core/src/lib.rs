//! Closed-loop mesh refinement from multi-view normal and silhouette
//! supervision, per-vertex texture fusion, reconstruction metrics and
//! collision-free asset placement for driving scenes.

pub mod color;
pub mod error;
pub mod imageio;
pub mod mesh;
pub mod metrics;
pub mod oracle;
pub mod refine;
pub mod remesh;
pub mod render;
pub mod scene;
pub mod texture;
pub mod voxel;

pub use error::{Error, Result};
pub use mesh::TriangleMesh;
