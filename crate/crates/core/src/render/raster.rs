use glam::{DVec2, DVec3};

use super::coverage::{pixel_overlap, segment_touches_pixel, signed_area2};
use super::{CameraView, Projector};
use crate::mesh::{MeshAdjacency, TriangleMesh};

pub const NO_FACE: u32 = u32::MAX;

/// Per-pixel outputs of [`rasterize`], row-major with `index = y * width + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMaps {
    pub width: usize,
    pub height: usize,
    /// World-space unit face normal where a face covers the pixel center.
    pub normal: Vec<DVec3>,
    /// Coverage in `[0, 1]`.
    pub mask: Vec<f64>,
    /// Depth along the viewing axis, `+inf` where empty.
    pub depth: Vec<f64>,
    pub color: Option<Vec<DVec3>>,
    /// Face hit at each pixel center.
    pub face_id: Vec<u32>,
    /// Pixels crossed by a silhouette edge, with the front- and back-facing
    /// coverage sums that produced their mask value.
    pub edge_pixels: Vec<EdgePixel>,
    pub(crate) mesh_signature: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePixel {
    pub index: u32,
    pub front: f64,
    pub back: f64,
}

impl EdgePixel {
    pub fn coverage(&self) -> f64 {
        self.front.max(self.back)
    }
}

impl ViewMaps {
    pub fn empty(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            normal: vec![DVec3::ZERO; n],
            mask: vec![0.0; n],
            depth: vec![f64::INFINITY; n],
            color: None,
            face_id: vec![NO_FACE; n],
            edge_pixels: Vec::new(),
            mesh_signature: (0, 0),
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn covered(&self, i: usize) -> bool {
        self.face_id[i] != NO_FACE
    }

    pub fn mask_sum(&self) -> f64 {
        self.mask.iter().sum()
    }
}

/// Screen-space data shared by the forward and backward passes.
pub(crate) struct ScreenMesh {
    pub projector: Projector,
    pub screen: Vec<DVec2>,
    pub depth: Vec<f64>,
    pub valid: Vec<bool>,
    /// Twice the signed screen area per face; 0 for skipped faces.
    pub area2: Vec<f64>,
}

impl ScreenMesh {
    pub fn new(mesh: &TriangleMesh, view: &CameraView) -> Self {
        let projector = view.projector();
        let n = mesh.vertices.len();
        let mut screen = Vec::with_capacity(n);
        let mut depth = Vec::with_capacity(n);
        let mut valid = Vec::with_capacity(n);
        for &p in &mesh.vertices {
            match projector.project(p) {
                Some((s, z)) => {
                    screen.push(s);
                    depth.push(z);
                    valid.push(true);
                }
                None => {
                    screen.push(DVec2::ZERO);
                    depth.push(f64::NAN);
                    valid.push(false);
                }
            }
        }
        let area2 = mesh
            .faces
            .iter()
            .map(|f| {
                if f.iter().all(|&v| valid[v as usize]) {
                    let a = signed_area2(f.map(|v| screen[v as usize]));
                    if a.abs() > 1e-14 {
                        return a;
                    }
                }
                0.0
            })
            .collect();
        Self {
            projector,
            screen,
            depth,
            valid,
            area2,
        }
    }

    pub fn tri(&self, f: &[u32; 3]) -> [DVec2; 3] {
        f.map(|v| self.screen[v as usize])
    }

    /// Inclusive pixel range of squares overlapping the triangle's bbox.
    pub fn square_range(&self, tri: &[DVec2; 3]) -> Option<(usize, usize, usize, usize)> {
        let lo = tri[0].min(tri[1]).min(tri[2]);
        let hi = tri[0].max(tri[1]).max(tri[2]);
        let (w, h) = (self.projector.width as f64, self.projector.height as f64);
        if hi.x < 0.0 || hi.y < 0.0 || lo.x >= w || lo.y >= h {
            return None;
        }
        Some((
            lo.x.floor().max(0.0) as usize,
            (hi.x.floor().min(w - 1.0)) as usize,
            lo.y.floor().max(0.0) as usize,
            (hi.y.floor().min(h - 1.0)) as usize,
        ))
    }
}

/// Edges that bound the projected front-facing or back-facing region.
pub(crate) fn silhouette_edges(adj: &MeshAdjacency, sm: &ScreenMesh) -> Vec<[u32; 2]> {
    adj.edges
        .iter()
        .filter(|e| {
            if !(sm.valid[e.v[0] as usize] && sm.valid[e.v[1] as usize]) {
                return false;
            }
            let pos = e.faces.iter().filter(|&&f| sm.area2[f as usize] > 0.0).count();
            let neg = e.faces.iter().filter(|&&f| sm.area2[f as usize] < 0.0).count();
            pos % 2 == 1 || neg % 2 == 1
        })
        .map(|e| e.v)
        .collect()
}

/// Rasterizes `mesh` from `view`.
///
/// Pixel centers are z-buffered against all faces (no culling; ties keep the
/// lower face index). The mask is 1 where a face covers the pixel center and
/// 0 elsewhere, except on pixels crossed by a silhouette edge, where it is the
/// exact area of the pixel covered by the projected front-facing (or
/// back-facing, whichever is larger) triangles, clamped to 1.
pub fn rasterize(mesh: &TriangleMesh, view: &CameraView) -> ViewMaps {
    rasterize_with(mesh, &mesh.adjacency(), view)
}

/// [`rasterize`] with a precomputed adjacency of `mesh`.
pub fn rasterize_with(mesh: &TriangleMesh, adj: &MeshAdjacency, view: &CameraView) -> ViewMaps {
    let (w, h) = (view.width, view.height);
    let mut maps = ViewMaps::empty(w, h);
    maps.mesh_signature = (mesh.vertex_count(), mesh.face_count());
    if mesh.is_empty() {
        return maps;
    }
    let sm = ScreenMesh::new(mesh, view);
    let normals: Vec<DVec3> = (0..mesh.faces.len()).map(|f| mesh.face_normal(f)).collect();
    let mut bary = vec![DVec3::ZERO; w * h];

    for (fi, f) in mesh.faces.iter().enumerate() {
        let area2 = sm.area2[fi];
        if area2 == 0.0 {
            continue;
        }
        let tri = sm.tri(f);
        let z = f.map(|v| sm.depth[v as usize]);
        let lo = tri[0].min(tri[1]).min(tri[2]);
        let hi = tri[0].max(tri[1]).max(tri[2]);
        let x0 = (lo.x - 0.5).ceil().max(0.0);
        let x1 = (hi.x - 0.5).floor().min(w as f64 - 1.0);
        let y0 = (lo.y - 0.5).ceil().max(0.0);
        let y1 = (hi.y - 0.5).floor().min(h as f64 - 1.0);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        for py in y0 as usize..=y1 as usize {
            for px in x0 as usize..=x1 as usize {
                let p = DVec2::new(px as f64 + 0.5, py as f64 + 0.5);
                let b = DVec3::new(
                    (tri[2] - tri[1]).perp_dot(p - tri[1]),
                    (tri[0] - tri[2]).perp_dot(p - tri[2]),
                    (tri[1] - tri[0]).perp_dot(p - tri[0]),
                ) / area2;
                // tolerance keeps centers on shared edges covered by at least one face
                if b.min_element() < -1e-9 {
                    continue;
                }
                let inv_z = b.x / z[0] + b.y / z[1] + b.z / z[2];
                let depth = 1.0 / inv_z;
                let i = py * w + px;
                if depth < maps.depth[i] {
                    maps.depth[i] = depth;
                    maps.face_id[i] = fi as u32;
                    maps.normal[i] = normals[fi];
                    maps.mask[i] = 1.0;
                    bary[i] = DVec3::new(b.x / z[0], b.y / z[1], b.z / z[2]) / inv_z;
                }
            }
        }
    }

    if let Some(colors) = &mesh.vertex_colors {
        let mut out = vec![DVec3::ZERO; w * h];
        for (i, c) in out.iter_mut().enumerate() {
            let fi = maps.face_id[i];
            if fi != NO_FACE {
                let [a, b, cc] = mesh.faces[fi as usize];
                let l = bary[i];
                *c = l.x * colors[a as usize] + l.y * colors[b as usize] + l.z * colors[cc as usize];
            }
        }
        maps.color = Some(out);
    }

    antialias_silhouette(mesh, adj, &sm, &mut maps);
    maps
}

fn antialias_silhouette(mesh: &TriangleMesh, adj: &MeshAdjacency, sm: &ScreenMesh, maps: &mut ViewMaps) {
    let w = maps.width;
    let mut slot = vec![u32::MAX; maps.pixel_count()];
    let mut pixels: Vec<u32> = Vec::new();
    for [a, b] in silhouette_edges(adj, sm) {
        let (sa, sb) = (sm.screen[a as usize], sm.screen[b as usize]);
        let tri = [sa, sb, sb];
        let Some((x0, x1, y0, y1)) = sm.square_range(&tri) else {
            continue;
        };
        for py in y0..=y1 {
            for px in x0..=x1 {
                let i = py * w + px;
                if slot[i] == u32::MAX && segment_touches_pixel(sa, sb, px, py) {
                    slot[i] = pixels.len() as u32;
                    pixels.push(i as u32);
                }
            }
        }
    }
    if pixels.is_empty() {
        return;
    }

    let mut sums = vec![(0.0f64, 0.0f64); pixels.len()];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let area2 = sm.area2[fi];
        if area2 == 0.0 {
            continue;
        }
        let tri = sm.tri(f);
        let Some((x0, x1, y0, y1)) = sm.square_range(&tri) else {
            continue;
        };
        for py in y0..=y1 {
            for px in x0..=x1 {
                let k = slot[py * w + px];
                if k == u32::MAX {
                    continue;
                }
                let a = pixel_overlap(tri, px, py);
                let s = &mut sums[k as usize];
                if area2 > 0.0 {
                    s.0 += a;
                } else {
                    s.1 += a;
                }
            }
        }
    }

    // sort by pixel index so the list is independent of edge order
    let mut edge_pixels: Vec<EdgePixel> = pixels
        .iter()
        .zip(&sums)
        .map(|(&index, &(front, back))| EdgePixel { index, front, back })
        .collect();
    edge_pixels.sort_by_key(|p| p.index);
    for p in &edge_pixels {
        maps.mask[p.index as usize] = p.coverage().min(1.0);
    }
    maps.edge_pixels = edge_pixels;
}
