use glam::{DVec2, DVec3};

use super::coverage::pixel_overlap_grad;
use super::raster::{ScreenMesh, ViewMaps, NO_FACE};
use super::CameraView;
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

/// Per-vertex gradients split by path.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexGradients {
    pub normal: Vec<DVec3>,
    pub mask: Vec<DVec3>,
}

impl VertexGradients {
    pub fn total(&self) -> Vec<DVec3> {
        self.normal.iter().zip(&self.mask).map(|(a, b)| *a + *b).collect()
    }
}

/// Chain-rule gradient of a loss with respect to vertex positions, given the
/// loss gradients with respect to the normal map and mask of `maps`.
///
/// Visibility (which face covers which pixel center) is held fixed. The mask
/// path is nonzero only on silhouette-edge pixels whose coverage is below 1.
pub fn backward(
    mesh: &TriangleMesh,
    view: &CameraView,
    maps: &ViewMaps,
    d_normal: &[DVec3],
    d_mask: &[f64],
) -> Result<Vec<DVec3>> {
    Ok(backward_parts(mesh, view, maps, d_normal, d_mask)?.total())
}

pub fn backward_parts(
    mesh: &TriangleMesh,
    view: &CameraView,
    maps: &ViewMaps,
    d_normal: &[DVec3],
    d_mask: &[f64],
) -> Result<VertexGradients> {
    let n_pix = maps.pixel_count();
    if maps.mesh_signature != (mesh.vertex_count(), mesh.face_count()) {
        return Err(Error::Mismatch(format!(
            "maps were rendered from a mesh with {:?} (vertices, faces), got {:?}",
            maps.mesh_signature,
            (mesh.vertex_count(), mesh.face_count())
        )));
    }
    if (view.width, view.height) != (maps.width, maps.height) {
        return Err(Error::Mismatch("view resolution differs from maps".into()));
    }
    if d_normal.len() != n_pix || d_mask.len() != n_pix {
        return Err(Error::Mismatch(format!(
            "gradient maps have {} / {} entries, expected {n_pix}",
            d_normal.len(),
            d_mask.len()
        )));
    }

    Ok(VertexGradients {
        normal: normal_path(mesh, maps, d_normal),
        mask: mask_path(mesh, view, maps, d_mask),
    })
}

/// Gradient of `g . normalize((b - a) x (c - a))` with respect to `a, b, c`.
pub fn face_normal_vjp(p: [DVec3; 3], g: DVec3) -> [DVec3; 3] {
    let cross = (p[1] - p[0]).cross(p[2] - p[0]);
    let len = cross.length();
    if len < 1e-300 {
        return [DVec3::ZERO; 3];
    }
    let n = cross / len;
    let gc = (g - n * n.dot(g)) / len;
    [
        (p[1] - p[2]).cross(gc),
        (p[2] - p[0]).cross(gc),
        (p[0] - p[1]).cross(gc),
    ]
}

fn normal_path(mesh: &TriangleMesh, maps: &ViewMaps, d_normal: &[DVec3]) -> Vec<DVec3> {
    let mut per_face = vec![DVec3::ZERO; mesh.face_count()];
    for (i, &fi) in maps.face_id.iter().enumerate() {
        if fi != NO_FACE {
            per_face[fi as usize] += d_normal[i];
        }
    }
    let mut grad = vec![DVec3::ZERO; mesh.vertex_count()];
    for (fi, g) in per_face.iter().enumerate() {
        if *g == DVec3::ZERO {
            continue;
        }
        let f = mesh.faces[fi];
        let gv = face_normal_vjp(mesh.face_positions(fi), *g);
        for k in 0..3 {
            grad[f[k] as usize] += gv[k];
        }
    }
    grad
}

fn mask_path(mesh: &TriangleMesh, view: &CameraView, maps: &ViewMaps, d_mask: &[f64]) -> Vec<DVec3> {
    let mut grad = vec![DVec3::ZERO; mesh.vertex_count()];
    // (weight, use front layer) per pixel, only where coverage is unclamped
    let mut active: Vec<Option<(f64, bool)>> = vec![None; maps.pixel_count()];
    let mut any = false;
    for p in &maps.edge_pixels {
        let w = d_mask[p.index as usize];
        if w != 0.0 && p.coverage() < 1.0 {
            active[p.index as usize] = Some((w, p.front >= p.back));
            any = true;
        }
    }
    if !any {
        return grad;
    }

    let sm = ScreenMesh::new(mesh, view);
    let mut screen_grad = vec![DVec2::ZERO; mesh.vertex_count()];
    let width = maps.width;
    for (fi, f) in mesh.faces.iter().enumerate() {
        let area2 = sm.area2[fi];
        if area2 == 0.0 {
            continue;
        }
        let front = area2 > 0.0;
        let tri = sm.tri(f);
        let Some((x0, x1, y0, y1)) = sm.square_range(&tri) else {
            continue;
        };
        for py in y0..=y1 {
            for px in x0..=x1 {
                let Some((w, layer)) = active[py * width + px] else {
                    continue;
                };
                if layer != front {
                    continue;
                }
                let (_, g) = pixel_overlap_grad(tri, px, py);
                for k in 0..3 {
                    screen_grad[f[k] as usize] += w * g[k];
                }
            }
        }
    }

    for (v, sg) in screen_grad.iter().enumerate() {
        if *sg == DVec2::ZERO || !sm.valid[v] {
            continue;
        }
        let j = sm.projector.jacobian(mesh.vertices[v]);
        grad[v] = sg.x * j[0] + sg.y * j[1];
    }
    grad
}
