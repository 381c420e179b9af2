//! Reconstruction metrics: Chamfer distance, F-score and volume IoU on
//! meshes, PSNR and SSIM on images.

mod image;

use glam::DVec3;
use kiddo::{ImmutableKdTree, SquaredEuclidean};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{validate_manifold, TriangleMesh};
use crate::voxel::{voxelize, VoxelGrid};

pub use image::{image_report, psnr, ssim, ImageReport, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};

pub const DEFAULT_SAMPLES: usize = 16384;
pub const DEFAULT_TAU: f64 = 0.05;
pub const DEFAULT_IOU_RESOLUTION: usize = 64;

/// Area-weighted uniform samples on the surface of `mesh`.
pub fn sample_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<Vec<DVec3>> {
    mesh.validate_indices()?;
    let mut cumulative = Vec::with_capacity(mesh.face_count());
    let mut total = 0.0;
    for f in 0..mesh.face_count() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::InvalidMesh("cannot sample a mesh with zero surface area".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * total;
        let f = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
        let s = r1.sqrt();
        let [a, b, c] = mesh.face_positions(f);
        out.push(a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2));
    }
    Ok(out)
}

/// Exact nearest-neighbor distances from each query to `points`.
pub fn nearest_distances(points: &[DVec3], queries: &[DVec3]) -> Vec<f64> {
    let data: Vec<[f64; 3]> = points.iter().map(|p| p.to_array()).collect();
    let tree: ImmutableKdTree<f64, 3> = ImmutableKdTree::new_from_slice(&data);
    queries
        .par_iter()
        .map(|q| tree.nearest_one::<SquaredEuclidean>(&q.to_array()).distance.sqrt())
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Symmetric Chamfer distance between two point sets:
/// `(mean_a min_b |a - b| + mean_b min_a |a - b|) / 2`.
pub fn chamfer_points(a: &[DVec3], b: &[DVec3]) -> f64 {
    let ab = mean(&nearest_distances(b, a));
    let ba = mean(&nearest_distances(a, b));
    0.5 * (ab + ba)
}

fn paired_samples(a: &TriangleMesh, b: &TriangleMesh, n: usize, seed: u64) -> Result<(Vec<DVec3>, Vec<DVec3>)> {
    if a.face_count() == 0 || b.face_count() == 0 {
        return Err(Error::InvalidMesh("metrics need two non-empty meshes".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    // the same seed on both sides makes the metric exactly symmetric
    Ok((sample_surface(a, n, seed)?, sample_surface(b, n, seed)?))
}

pub fn chamfer_distance(a: &TriangleMesh, b: &TriangleMesh, n_samples: usize, seed: u64) -> Result<f64> {
    let (pa, pb) = paired_samples(a, b, n_samples, seed)?;
    Ok(chamfer_points(&pa, &pb))
}

/// F-score from point samples: harmonic mean of the fractions of each set
/// within `tau` of the other.
pub fn f_score_points(a: &[DVec3], b: &[DVec3], tau: f64) -> f64 {
    let hit = |d: Vec<f64>| d.iter().filter(|&&x| x <= tau).count() as f64 / d.len() as f64;
    let precision = hit(nearest_distances(b, a));
    let recall = hit(nearest_distances(a, b));
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn f_score(a: &TriangleMesh, b: &TriangleMesh, tau: f64, n_samples: usize, seed: u64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let (pa, pb) = paired_samples(a, b, n_samples, seed)?;
    Ok(f_score_points(&pa, &pb, tau))
}

/// Volume IoU of two closed meshes, voxelized at `resolution` cells along the
/// longest side of their joint bounding box.
pub fn volume_iou(a: &TriangleMesh, b: &TriangleMesh, resolution: usize) -> Result<f64> {
    for (name, m) in [("first", a), ("second", b)] {
        let report = validate_manifold(m);
        if report.boundary_edges > 0 || m.face_count() == 0 {
            return Err(Error::NonManifold(format!(
                "volume IoU needs closed meshes; the {name} has {} boundary edges and {} faces",
                report.boundary_edges,
                m.face_count()
            )));
        }
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let (la, ha) = a.bounding_box().expect("non-empty");
    let (lb, hb) = b.bounding_box().expect("non-empty");
    let grid = VoxelGrid::covering(la.min(lb), ha.max(hb), resolution);
    let (va, vb) = rayon::join(|| voxelize(a, &grid), || voxelize(b, &grid));
    let (mut inter, mut union) = (0usize, 0usize);
    for (x, y) in va.iter().zip(&vb) {
        inter += (*x && *y) as usize;
        union += (*x || *y) as usize;
    }
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricParams {
    pub samples: usize,
    pub tau: f64,
    pub iou_resolution: usize,
    pub seed: u64,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            tau: DEFAULT_TAU,
            iou_resolution: DEFAULT_IOU_RESOLUTION,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryReport {
    pub chamfer: f64,
    /// `None` when either mesh is open.
    pub volume_iou: Option<f64>,
    pub f_score: f64,
    pub samples_used: usize,
    pub tau: f64,
}

pub fn geometry_report(a: &TriangleMesh, b: &TriangleMesh, params: &MetricParams) -> Result<GeometryReport> {
    let (pa, pb) = paired_samples(a, b, params.samples, params.seed)?;
    let volume_iou = match volume_iou(a, b, params.iou_resolution) {
        Ok(v) => Some(v),
        Err(Error::NonManifold(msg)) => {
            log::warn!("skipping volume IoU: {msg}");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(GeometryReport {
        chamfer: chamfer_points(&pa, &pb),
        volume_iou,
        f_score: f_score_points(&pa, &pb, params.tau),
        samples_used: params.samples,
        tau: params.tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn samples_lie_on_the_surface() {
        let sphere = primitives::icosphere(3);
        let pts = sample_surface(&sphere, 1000, 1).unwrap();
        assert!(pts.iter().all(|p| p.length() <= 1.0 + 1e-12 && p.length() > 0.98));
        assert_eq!(pts, sample_surface(&sphere, 1000, 1).unwrap());
    }

    #[test]
    fn self_distance_is_zero_and_symmetric() {
        let a = primitives::icosphere(3).transformed(0.5, DVec3::ZERO);
        let b = primitives::cube();
        assert_eq!(chamfer_distance(&a, &a, 4096, 3).unwrap(), 0.0);
        assert_eq!(
            chamfer_distance(&a, &b, 4096, 3).unwrap(),
            chamfer_distance(&b, &a, 4096, 3).unwrap()
        );
        assert_eq!(f_score(&a, &a, 0.05, 2048, 1).unwrap(), 1.0);
    }

    #[test]
    fn nearest_distances_match_brute_force() {
        let a = sample_surface(&primitives::cube(), 300, 5).unwrap();
        let b = sample_surface(&primitives::icosphere(2), 200, 6).unwrap();
        let fast = nearest_distances(&a, &b);
        for (q, d) in b.iter().zip(&fast) {
            let brute = a.iter().map(|p| p.distance(*q)).fold(f64::INFINITY, f64::min);
            assert_eq!(brute, *d);
        }
    }

    #[test]
    fn empty_and_open_meshes_are_rejected() {
        let empty = TriangleMesh::default();
        assert!(chamfer_distance(&empty, &primitives::cube(), 10, 0).is_err());
        assert!(matches!(
            volume_iou(&primitives::quad(1.0, 0.0), &primitives::cube(), 16),
            Err(Error::NonManifold(_))
        ));
        let report = geometry_report(&primitives::quad(1.0, 0.0), &primitives::cube(), &MetricParams::default()).unwrap();
        assert_eq!(report.volume_iou, None);
    }

    #[test]
    fn iou_of_identical_and_disjoint_cubes() {
        let cube = primitives::cube();
        assert_eq!(volume_iou(&cube, &cube, 32).unwrap(), 1.0);
        let far = cube.transformed(1.0, DVec3::new(3.0, 0.0, 0.0));
        assert_eq!(volume_iou(&cube, &far, 32).unwrap(), 0.0);
    }
}
