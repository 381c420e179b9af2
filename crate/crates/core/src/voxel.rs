//! Solid voxelization of closed meshes by ray parity.

use glam::{DVec2, DVec3};
use rayon::prelude::*;

use crate::mesh::TriangleMesh;

/// Axis-aligned grid of cubic cells; voxel `(x, y, z)` has its center at
/// `origin + (i + 0.5) * cell`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelGrid {
    pub origin: DVec3,
    pub cell: f64,
    pub dims: [usize; 3],
}

impl VoxelGrid {
    /// Cubic cells covering `[lo, hi]` with `resolution` cells along the
    /// longest axis.
    pub fn covering(lo: DVec3, hi: DVec3, resolution: usize) -> Self {
        let extent = (hi - lo).max_element().max(1e-12);
        let cell = extent / resolution as f64;
        let dims = [0, 1, 2].map(|a| (((hi[a] - lo[a]) / cell).ceil() as usize).clamp(1, resolution));
        let span = DVec3::new(dims[0] as f64, dims[1] as f64, dims[2] as f64) * cell;
        // center the (possibly slightly larger) grid on the box
        let origin = 0.5 * (lo + hi) - 0.5 * span;
        Self { origin, cell, dims }
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn center_along(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + (i as f64 + 0.5) * self.cell
    }

    pub fn center(&self, x: usize, y: usize, z: usize) -> DVec3 {
        DVec3::new(self.center_along(0, x), self.center_along(1, y), self.center_along(2, z))
    }
}

/// Occupancy of every voxel center: inside when at least two of the three
/// axis-aligned rays through it cross the surface an odd number of times.
pub fn voxelize(mesh: &TriangleMesh, grid: &VoxelGrid) -> Vec<bool> {
    let votes: Vec<Vec<bool>> = (0..3).into_par_iter().map(|axis| parity_along(mesh, grid, axis)).collect();
    (0..grid.len())
        .map(|i| votes.iter().filter(|v| v[i]).count() >= 2)
        .collect()
}

/// Whether `e = q - p` owns points lying exactly on it; antisymmetric in the
/// direction so a shared edge belongs to exactly one of its two triangles.
fn owns_edge(e: DVec2) -> bool {
    e.y < 0.0 || (e.y == 0.0 && e.x > 0.0)
}

fn parity_along(mesh: &TriangleMesh, grid: &VoxelGrid, axis: usize) -> Vec<bool> {
    let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
    let (nb, nc) = (grid.dims[b], grid.dims[c]);
    let mut hits: Vec<Vec<f64>> = vec![Vec::new(); nb * nc];
    let to_cell = |v: f64, ax: usize| (v - grid.origin[ax]) / grid.cell - 0.5;

    for f in &mesh.faces {
        let p = f.map(|v| mesh.vertices[v as usize]);
        let mut q = p.map(|v| DVec2::new(v[b], v[c]));
        let mut h = p.map(|v| v[axis]);
        let mut area = (q[1] - q[0]).perp_dot(q[2] - q[0]);
        if area == 0.0 {
            continue;
        }
        if area < 0.0 {
            q.swap(1, 2);
            h.swap(1, 2);
            area = -area;
        }
        let lo = q[0].min(q[1]).min(q[2]);
        let hi = q[0].max(q[1]).max(q[2]);
        let j0 = to_cell(lo.x, b).ceil().max(0.0) as usize;
        let j1 = to_cell(hi.x, b).floor();
        let k0 = to_cell(lo.y, c).ceil().max(0.0) as usize;
        let k1 = to_cell(hi.y, c).floor();
        if j1 < 0.0 || k1 < 0.0 {
            continue;
        }
        let j1 = (j1 as usize).min(nb - 1);
        let k1 = (k1 as usize).min(nc - 1);
        for j in j0..=j1 {
            for k in k0..=k1 {
                let pt = DVec2::new(grid.center_along(b, j), grid.center_along(c, k));
                let mut w = [0.0; 3];
                let mut inside = true;
                for e in 0..3 {
                    let (s, t) = (q[(e + 1) % 3], q[(e + 2) % 3]);
                    let we = (t - s).perp_dot(pt - s);
                    if we < 0.0 || (we == 0.0 && !owns_edge(t - s)) {
                        inside = false;
                        break;
                    }
                    w[e] = we;
                }
                if inside {
                    hits[j * nc + k].push((w[0] * h[0] + w[1] * h[1] + w[2] * h[2]) / area);
                }
            }
        }
    }

    let mut out = vec![false; grid.len()];
    let na = grid.dims[axis];
    for (ray, list) in hits.iter_mut().enumerate() {
        if list.is_empty() {
            continue;
        }
        list.sort_by(f64::total_cmp);
        let (j, k) = (ray / nc, ray % nc);
        let mut crossed = 0;
        for i in 0..na {
            let x = grid.center_along(axis, i);
            while crossed < list.len() && list[crossed] < x {
                crossed += 1;
            }
            if crossed % 2 == 1 {
                let mut ijk = [0; 3];
                ijk[axis] = i;
                ijk[b] = j;
                ijk[c] = k;
                out[grid.index(ijk[0], ijk[1], ijk[2])] = true;
            }
        }
    }
    out
}
