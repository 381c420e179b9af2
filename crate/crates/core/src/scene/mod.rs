//! Scene synthesis: snapping assets onto a ground surface, sampling poses
//! clear of tracked obstacles, and compositing asset renders over background
//! frames.

mod footprint;

use glam::{DMat3, DVec2, DVec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::render::ViewMaps;

pub use footprint::{Rect2, Region};

pub const DEFAULT_CLEARANCE: f64 = 0.3;
/// Sampling gives up once fewer than this fraction of candidates survive.
pub const SATURATION_RATE: f64 = 1e-4;
const BATCH: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GroundSurface {
    Plane {
        point: [f64; 3],
        normal: [f64; 3],
    },
    /// Heights on a regular grid, row-major with `heights[r * cols + c]` at
    /// `origin + (c, r) * cell`.
    Heightfield {
        origin: [f64; 2],
        cell: f64,
        rows: usize,
        cols: usize,
        heights: Vec<f64>,
    },
}

impl GroundSurface {
    pub fn flat() -> Self {
        GroundSurface::Plane {
            point: [0.0; 3],
            normal: [0.0, 0.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GroundSurface::Plane { point, normal } => {
                let n = DVec3::from_array(*normal);
                if !point.iter().all(|v| v.is_finite()) || ((n.length() - 1.0).abs() > 1e-9) {
                    return Err(Error::InvalidArgument(format!(
                        "plane needs a finite point and unit normal, got {point:?} and {normal:?}"
                    )));
                }
                if n.z.abs() < 1e-9 {
                    return Err(Error::InvalidArgument("a vertical plane cannot serve as ground".into()));
                }
            }
            GroundSurface::Heightfield {
                origin,
                cell,
                rows,
                cols,
                heights,
            } => {
                if *rows < 2 || *cols < 2 || heights.len() != rows * cols {
                    return Err(Error::InvalidArgument(format!(
                        "heightfield needs at least 2x2 samples and rows*cols heights, got {rows}x{cols} with {}",
                        heights.len()
                    )));
                }
                if !(*cell > 0.0) || !origin.iter().chain(heights).all(|v| v.is_finite()) {
                    return Err(Error::InvalidArgument(
                        "heightfield cell size must be positive and every value finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Height and upward unit normal at `xy`.
    pub fn sample(&self, xy: DVec2) -> Result<(f64, DVec3)> {
        match self {
            GroundSurface::Plane { point, normal } => {
                let (p, n) = (DVec3::from_array(*point), DVec3::from_array(*normal));
                let n = if n.z < 0.0 { -n } else { n };
                let h = p.z - (n.x * (xy.x - p.x) + n.y * (xy.y - p.y)) / n.z;
                Ok((h, n))
            }
            GroundSurface::Heightfield {
                origin,
                cell,
                rows,
                cols,
                heights,
            } => {
                let g = (xy - DVec2::from_array(*origin)) / *cell;
                let (maxc, maxr) = ((*cols - 1) as f64, (*rows - 1) as f64);
                if !(g.x >= 0.0 && g.y >= 0.0 && g.x <= maxc && g.y <= maxr) {
                    return Err(Error::OutsideDomain { x: xy.x, y: xy.y });
                }
                let c0 = (g.x.floor() as usize).min(cols - 2);
                let r0 = (g.y.floor() as usize).min(rows - 2);
                let (tx, ty) = (g.x - c0 as f64, g.y - r0 as f64);
                let at = |r: usize, c: usize| heights[r * cols + c];
                let (h00, h01, h10, h11) = (at(r0, c0), at(r0, c0 + 1), at(r0 + 1, c0), at(r0 + 1, c0 + 1));
                let h = h00 * (1.0 - tx) * (1.0 - ty) + h01 * tx * (1.0 - ty) + h10 * (1.0 - tx) * ty + h11 * tx * ty;
                let dx = ((h01 - h00) * (1.0 - ty) + (h11 - h10) * ty) / cell;
                let dy = ((h10 - h00) * (1.0 - tx) + (h11 - h01) * tx) / cell;
                Ok((h, DVec3::new(-dx, -dy, 1.0).normalize()))
            }
        }
    }

    pub fn contains(&self, xy: DVec2) -> bool {
        self.sample(xy).is_ok()
    }
}

/// Rotation taking `+Z` onto the unit vector `n`.
fn align_z_to(n: DVec3) -> DMat3 {
    let axis = DVec3::Z.cross(n);
    let s = axis.length();
    let c = n.z;
    if s < 1e-15 {
        return if c > 0.0 {
            DMat3::IDENTITY
        } else {
            DMat3::from_rotation_x(std::f64::consts::PI)
        };
    }
    DMat3::from_axis_angle(axis / s, s.atan2(c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub asset_id: String,
    /// Rows of the rotation applied to asset coordinates.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    pub footprint: Rect2,
    /// First and last frame (inclusive) the asset is present in.
    pub timesteps: [usize; 2],
}

impl Placement {
    pub fn rotation_matrix(&self) -> DMat3 {
        DMat3::from_cols_array_2d(&self.rotation).transpose()
    }

    pub fn apply(&self, mesh: &TriangleMesh) -> TriangleMesh {
        let r = self.rotation_matrix();
        let t = DVec3::from_array(self.translation);
        let mut out = mesh.clone();
        for v in &mut out.vertices {
            *v = r * *v + t;
        }
        out
    }

    pub fn up(&self) -> DVec3 {
        self.rotation_matrix() * DVec3::Z
    }
}

/// Poses `asset` at `xy` with heading `yaw`: its `+Z` follows the surface
/// normal and its lowest point (along that normal) touches the surface's
/// tangent plane at `xy`.
pub fn snap_to_ground(
    asset: &TriangleMesh,
    asset_id: &str,
    xy: DVec2,
    yaw: f64,
    surface: &GroundSurface,
    timesteps: [usize; 2],
) -> Result<Placement> {
    surface.validate()?;
    if asset.vertices.is_empty() {
        return Err(Error::InvalidMesh("cannot place an asset without vertices".into()));
    }
    let (h, n) = surface.sample(xy)?;
    let r = align_z_to(n) * DMat3::from_rotation_z(yaw);
    let lowest = asset
        .vertices
        .iter()
        .map(|v| n.dot(r * *v))
        .fold(f64::INFINITY, f64::min);
    let contact = DVec3::new(xy.x, xy.y, h);
    let t = contact - lowest * n;

    let (u, w) = (DVec2::from_angle(yaw), DVec2::from_angle(yaw).perp());
    let (mut lo, mut hi) = (DVec2::splat(f64::INFINITY), DVec2::splat(f64::NEG_INFINITY));
    for v in &asset.vertices {
        let p = (r * *v + t).truncate();
        let q = DVec2::new(p.dot(u), p.dot(w));
        lo = lo.min(q);
        hi = hi.max(q);
    }
    let mid = 0.5 * (lo + hi);
    let footprint = Rect2 {
        center: (mid.x * u + mid.y * w).to_array(),
        yaw,
        half_extents: (0.5 * (hi - lo)).max(DVec2::splat(1e-9)).to_array(),
    };
    Ok(Placement {
        asset_id: asset_id.to_string(),
        rotation: r.transpose().to_cols_array_2d(),
        translation: t.to_array(),
        footprint,
        timesteps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleTrack {
    pub id: String,
    /// Frame of `footprints[0]`; footprints cover consecutive frames.
    pub start: usize,
    pub footprints: Vec<Rect2>,
}

impl ObstacleTrack {
    pub fn validate(&self) -> Result<()> {
        for f in &self.footprints {
            f.validate()?;
        }
        Ok(())
    }

    pub fn end(&self) -> usize {
        self.start + self.footprints.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoseSample {
    pub xy: [f64; 2],
    pub yaw: f64,
    pub footprint: Rect2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoseSampling {
    pub poses: Vec<PoseSample>,
    /// Set when sampling stopped because almost no candidates survived.
    pub saturated: bool,
    pub attempts: usize,
}

/// Rejection-samples up to `n_poses` headings and positions in `region` for
/// an asset with local footprint `asset_footprint` (relative to the asset
/// origin, yaw 0). A candidate survives when its footprint grown by
/// `clearance` overlaps no obstacle at any frame and no earlier pose.
///
/// Candidates come in fixed batches seeded from `seed` and the batch index
/// and are accepted in order, so the result does not depend on thread count.
pub fn find_collision_free(
    surface: &GroundSurface,
    tracks: &[ObstacleTrack],
    asset_footprint: &Rect2,
    region: &Region,
    n_poses: usize,
    clearance: f64,
    seed: u64,
) -> Result<PoseSampling> {
    surface.validate()?;
    region.validate()?;
    asset_footprint.validate()?;
    for t in tracks {
        t.validate()?;
    }
    if !(clearance >= 0.0 && clearance.is_finite()) {
        return Err(Error::InvalidArgument(format!("clearance must be non-negative, got {clearance}")));
    }
    for c in region.corners() {
        if !surface.contains(c) {
            return Err(Error::OutsideDomain { x: c.x, y: c.y });
        }
    }
    let obstacles: Vec<&Rect2> = tracks.iter().flat_map(|t| &t.footprints).collect();
    let local_center = DVec2::from_array(asset_footprint.center);
    let candidate = |rng: &mut ChaCha8Rng| {
        let xy = DVec2::new(
            rng.random_range(region.min[0]..=region.max[0]),
            rng.random_range(region.min[1]..=region.max[1]),
        );
        let yaw = rng.random_range(0.0..std::f64::consts::TAU);
        let footprint = Rect2 {
            center: (xy + DVec2::from_angle(yaw).rotate(local_center)).to_array(),
            yaw: asset_footprint.yaw + yaw,
            half_extents: asset_footprint.half_extents,
        };
        (xy, yaw, footprint)
    };

    let mut poses: Vec<PoseSample> = Vec::new();
    let mut attempts = 0usize;
    let mut saturated = false;
    let mut batch = 0u64;
    while poses.len() < n_poses {
        let candidates: Vec<(DVec2, f64, Rect2, bool)> = (0..BATCH)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(batch * BATCH as u64 + k as u64);
                let (xy, yaw, fp) = candidate(&mut rng);
                let grown = fp.inflated(clearance);
                let clear = obstacles.iter().all(|o| !grown.intersects(o));
                (xy, yaw, fp, clear)
            })
            .collect();
        batch += 1;
        for (xy, yaw, fp, clear) in candidates {
            attempts += 1;
            let grown = fp.inflated(clearance);
            if clear && poses.iter().all(|p| !grown.intersects(&p.footprint)) {
                poses.push(PoseSample {
                    xy: xy.to_array(),
                    yaw,
                    footprint: fp,
                });
                if poses.len() == n_poses {
                    break;
                }
            }
        }
        if poses.len() < n_poses && attempts >= 10 * BATCH && (poses.len() as f64) < SATURATION_RATE * attempts as f64 {
            saturated = true;
            break;
        }
    }
    Ok(PoseSampling {
        poses,
        saturated,
        attempts,
    })
}

/// Alpha-blends an asset render over a background where the asset is in
/// front: `alpha * asset + (1 - alpha) * background` with `alpha` the asset
/// coverage; elsewhere the background passes through.
pub fn composite(background: &[DVec3], background_depth: &[f64], asset: &ViewMaps) -> Result<Vec<DVec3>> {
    let n = asset.pixel_count();
    if background.len() != n || background_depth.len() != n {
        return Err(Error::Mismatch(format!(
            "background has {} pixels and depth {} pixels, asset render is {}x{}",
            background.len(),
            background_depth.len(),
            asset.width,
            asset.height
        )));
    }
    let Some(color) = asset.color.as_ref() else {
        if asset.mask.iter().all(|&m| m == 0.0) {
            return Ok(background.to_vec());
        }
        return Err(Error::InvalidArgument("asset render carries no color".into()));
    };
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let a = asset.mask[i];
            if a > 0.0 && asset.depth[i] < background_depth[i] {
                a * color[i] + (1.0 - a) * background[i]
            } else {
                background[i]
            }
        })
        .collect())
}

/// Triangulated patch of the ground over `region`, `cells` quads per side.
pub fn ground_mesh(surface: &GroundSurface, region: &Region, cells: usize) -> Result<TriangleMesh> {
    surface.validate()?;
    region.validate()?;
    let cells = cells.max(1);
    let (lo, hi) = (DVec2::from_array(region.min), DVec2::from_array(region.max));
    let mut vertices = Vec::with_capacity((cells + 1) * (cells + 1));
    for r in 0..=cells {
        for c in 0..=cells {
            let t = DVec2::new(c as f64, r as f64) / cells as f64;
            let xy = lo + (hi - lo) * t;
            let (h, _) = surface.sample(xy)?;
            vertices.push(xy.extend(h));
        }
    }
    let stride = (cells + 1) as u32;
    let mut faces = Vec::with_capacity(2 * cells * cells);
    for r in 0..cells as u32 {
        for c in 0..cells as u32 {
            let a = r * stride + c;
            faces.push([a, a + 1, a + stride + 1]);
            faces.push([a, a + stride + 1, a + stride]);
        }
    }
    Ok(TriangleMesh::new(vertices, faces))
}

/// Closed box of the given height over `rect`, standing on the ground height
/// at the rectangle's center.
pub fn footprint_box(rect: &Rect2, surface: &GroundSurface, height: f64) -> Result<TriangleMesh> {
    rect.validate()?;
    let (base, _) = surface.sample(DVec2::from_array(rect.center))?;
    let corners = rect.corners();
    let vertices: Vec<DVec3> = corners
        .iter()
        .map(|c| c.extend(base))
        .chain(corners.iter().map(|c| c.extend(base + height)))
        .collect();
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    Ok(TriangleMesh::new(vertices, faces))
}
