//! Deterministic CPU rasterizer for normal, silhouette, depth and color maps,
//! with analytic gradients of per-pixel losses with respect to vertex
//! positions.

mod backward;
mod camera;
mod coverage;
mod raster;

use rayon::prelude::*;

pub use backward::{backward, backward_parts, face_normal_vjp, VertexGradients};
pub use camera::{
    standard_views, CameraView, Projector, DEFAULT_FOV_DEG, DEFAULT_RADIUS, DEFAULT_RESOLUTION, NEAR,
};
pub use raster::{rasterize, rasterize_with, EdgePixel, ViewMaps, NO_FACE};

use crate::mesh::{MeshAdjacency, TriangleMesh};

/// Renders every view; output order follows `views`.
pub fn rasterize_views(mesh: &TriangleMesh, adj: &MeshAdjacency, views: &[CameraView]) -> Vec<ViewMaps> {
    views.par_iter().map(|v| rasterize_with(mesh, adj, v)).collect()
}
