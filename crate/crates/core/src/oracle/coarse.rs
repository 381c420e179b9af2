//! Degraded starting meshes standing in for a feed-forward reconstruction.

use std::collections::HashMap;

use glam::DVec3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{laplacian_smooth, primitives, TriangleMesh};
use crate::remesh::edit::EditMesh;
use crate::remesh::{collapse_allowed, require_closed_manifold};
use crate::voxel::{voxelize, VoxelGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoarseMode {
    /// Level-3 icosphere around the reference's bounding sphere.
    Sphere,
    /// Edge-collapse decimation to about 500 faces, then vertex jitter.
    Decimate,
    /// Voxelized, re-extracted and smoothed.
    Blob,
}

pub const DECIMATE_FACES: usize = 500;
pub const DECIMATE_JITTER: f64 = 0.01;
pub const BLOB_RESOLUTION: usize = 24;
pub const BLOB_SMOOTHING_STEPS: usize = 10;

impl std::str::FromStr for CoarseMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Self::Sphere),
            "decimate" => Ok(Self::Decimate),
            "blob" => Ok(Self::Blob),
            _ => Err(Error::InvalidArgument(format!(
                "unknown coarse mode {s:?} (expected sphere, decimate or blob)"
            ))),
        }
    }
}

/// Builds a closed manifold starting mesh from `reference`. `seed` drives the
/// jitter of the decimate mode.
pub fn make_coarse_initial(reference: &TriangleMesh, mode: CoarseMode, seed: u64) -> Result<TriangleMesh> {
    let (lo, hi) = reference
        .bounding_box()
        .ok_or_else(|| Error::InvalidMesh("reference mesh has no vertices".into()))?;
    match mode {
        CoarseMode::Sphere => {
            let center = 0.5 * (lo + hi);
            let radius = reference
                .vertices
                .iter()
                .map(|v| v.distance(center))
                .fold(0.0, f64::max)
                .max(1e-6);
            Ok(primitives::icosphere(3).transformed(radius, center))
        }
        CoarseMode::Decimate => {
            let mut mesh = if reference.face_count() > DECIMATE_FACES {
                decimate(reference, DECIMATE_FACES)?
            } else {
                require_closed_manifold(reference)?;
                reference.clone()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gauss = Normal::new(0.0, DECIMATE_JITTER).expect("finite deviation");
            for v in &mut mesh.vertices {
                *v += DVec3::new(gauss.sample(&mut rng), gauss.sample(&mut rng), gauss.sample(&mut rng));
            }
            mesh.vertex_colors = None;
            Ok(mesh)
        }
        CoarseMode::Blob => {
            // one empty cell of margin on every side keeps the surface closed
            let extent = (hi - lo).max_element().max(1e-6);
            let cell = extent / (BLOB_RESOLUTION - 2) as f64;
            let grid = VoxelGrid::covering(lo - DVec3::splat(cell), hi + DVec3::splat(cell), BLOB_RESOLUTION);
            let occupancy = voxelize(reference, &grid);
            let mesh = marching_tetrahedra(&occupancy, &grid);
            if mesh.face_count() == 0 {
                return Err(Error::InvalidMesh("reference encloses no voxel centers".into()));
            }
            Ok(laplacian_smooth(&mesh, BLOB_SMOOTHING_STEPS, 0.5))
        }
    }
}

/// Collapses shortest legal edges until at most `target_faces` remain.
pub fn decimate(mesh: &TriangleMesh, target_faces: usize) -> Result<TriangleMesh> {
    require_closed_manifold(mesh)?;
    let mut em = EditMesh::new(mesh);
    let mut faces = mesh.face_count();
    while faces > target_faces {
        let mut edges: Vec<(f64, u32, u32)> = em.edges().into_iter().map(|(a, b)| (em.length(a, b), a, b)).collect();
        edges.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        // one collapse per neighborhood per round keeps the order close to
        // globally shortest-first
        let mut touched = vec![false; em.pos.len()];
        let mut progress = false;
        for (_, a, b) in edges {
            if faces <= target_faces {
                break;
            }
            if touched[a as usize] || touched[b as usize] || !em.vert_alive[a as usize] || !em.vert_alive[b as usize] {
                continue;
            }
            let mid = 0.5 * (em.pos[a as usize] + em.pos[b as usize]);
            if collapse_allowed(&em, b, a, mid, f64::INFINITY) {
                for v in em.neighbors(a).into_iter().chain(em.neighbors(b)) {
                    touched[v as usize] = true;
                }
                em.collapse(b, a, mid);
                faces -= 2;
                progress = true;
            }
        }
        if !progress {
            log::warn!("decimation stalled at {faces} faces");
            break;
        }
    }
    Ok(em.finish().0)
}

const CUBE_CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Six tetrahedra around the 0-6 diagonal; neighbouring cubes agree on the
/// face diagonals, so the extracted surface is watertight.
const CUBE_TETS: [[usize; 4]; 6] = [[0, 5, 1, 6], [0, 1, 2, 6], [0, 2, 3, 6], [0, 3, 7, 6], [0, 7, 4, 6], [0, 4, 5, 6]];

/// Boundary surface of the occupied voxels, with vertices at midpoints of
/// lattice edges joining inside and outside voxel centers. Outward oriented.
pub fn marching_tetrahedra(occupancy: &[bool], grid: &VoxelGrid) -> TriangleMesh {
    let [nx, ny, nz] = grid.dims;
    // lattice of voxel centers padded with one outside layer
    let (lx, ly, lz) = (nx + 2, ny + 2, nz + 2);
    let lattice = |i: usize, j: usize, k: usize| i + lx * (j + ly * k);
    let inside = |i: usize, j: usize, k: usize| {
        (1..=nx).contains(&i) && (1..=ny).contains(&j) && (1..=nz).contains(&k) && occupancy[grid.index(i - 1, j - 1, k - 1)]
    };
    let position = |p: usize| {
        let (i, j, k) = (p % lx, (p / lx) % ly, p / (lx * ly));
        grid.origin + (DVec3::new(i as f64, j as f64, k as f64) - DVec3::splat(0.5)) * grid.cell
    };

    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut edge_vertex: HashMap<(usize, usize), u32> = HashMap::new();
    let mut midpoint = |p: usize, q: usize, vertices: &mut Vec<DVec3>| -> u32 {
        let key = (p.min(q), p.max(q));
        *edge_vertex.entry(key).or_insert_with(|| {
            vertices.push(0.5 * (position(p) + position(q)));
            vertices.len() as u32 - 1
        })
    };

    for k in 0..lz - 1 {
        for j in 0..ly - 1 {
            for i in 0..lx - 1 {
                let corner = CUBE_CORNERS.map(|[a, b, c]| (lattice(i + a, j + b, k + c), inside(i + a, j + b, k + c)));
                if corner.iter().all(|c| c.1) || corner.iter().all(|c| !c.1) {
                    continue;
                }
                for tet in CUBE_TETS {
                    let t = tet.map(|c| corner[c]);
                    let ins: Vec<usize> = t.iter().filter(|c| c.1).map(|c| c.0).collect();
                    let outs: Vec<usize> = t.iter().filter(|c| !c.1).map(|c| c.0).collect();
                    let in_c = ins.iter().map(|&p| position(p)).sum::<DVec3>() / ins.len().max(1) as f64;
                    let out_c = outs.iter().map(|&p| position(p)).sum::<DVec3>() / outs.len().max(1) as f64;
                    let dir = out_c - in_c;
                    let tris: Vec<[u32; 3]> = match (ins.len(), outs.len()) {
                        (1, 3) => vec![[0, 1, 2].map(|m| midpoint(ins[0], outs[m], &mut vertices))],
                        (3, 1) => vec![[0, 1, 2].map(|m| midpoint(ins[m], outs[0], &mut vertices))],
                        (2, 2) => {
                            let ac = midpoint(ins[0], outs[0], &mut vertices);
                            let ad = midpoint(ins[0], outs[1], &mut vertices);
                            let bd = midpoint(ins[1], outs[1], &mut vertices);
                            let bc = midpoint(ins[1], outs[0], &mut vertices);
                            vec![[ac, ad, bd], [ac, bd, bc]]
                        }
                        _ => continue,
                    };
                    for mut tri in tris {
                        let p = tri.map(|v| vertices[v as usize]);
                        if (p[1] - p[0]).cross(p[2] - p[0]).dot(dir) < 0.0 {
                            tri.swap(1, 2);
                        }
                        faces.push(tri);
                    }
                }
            }
        }
    }
    TriangleMesh::new(vertices, faces)
}
