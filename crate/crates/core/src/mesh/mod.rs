//! Indexed triangle meshes, topology queries, validation and file I/O.
//!
//! World space is right-handed with +Z up. Faces are counter-clockwise when
//! seen from outside, so `(b - a) x (c - a)` points outward.

mod adjacency;
pub mod io;
pub mod primitives;
mod validate;

use glam::DVec3;

pub use adjacency::{Edge, MeshAdjacency};
pub use io::{load_mesh, save_mesh, save_ply_with_view_ids};
pub use validate::{validate_manifold, ManifoldReport};

use crate::error::{Error, Result};

/// Indexed triangle mesh with optional linear-RGB vertex colors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<DVec3>,
    pub faces: Vec<[u32; 3]>,
    pub vertex_colors: Option<Vec<DVec3>>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<DVec3>, faces: Vec<[u32; 3]>) -> Self {
        Self {
            vertices,
            faces,
            vertex_colors: None,
        }
    }

    pub fn with_colors(mut self, colors: Vec<DVec3>) -> Self {
        self.vertex_colors = Some(colors);
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Checks index ranges, repeated vertices within a face and color count.
    pub fn validate_indices(&self) -> Result<()> {
        let n = self.vertices.len();
        for (fi, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&v| v as usize >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references vertex out of range ({f:?}, {n} vertices)"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} repeats a vertex ({f:?})"
                )));
            }
        }
        if let Some(c) = &self.vertex_colors {
            if c.len() != n {
                return Err(Error::InvalidMesh(format!(
                    "{} vertex colors for {n} vertices",
                    c.len()
                )));
            }
        }
        if self.vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh("non-finite vertex position".into()));
        }
        Ok(())
    }

    pub fn face_positions(&self, f: usize) -> [DVec3; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Unnormalized face normal, length equals twice the face area.
    pub fn face_cross(&self, f: usize) -> DVec3 {
        let [a, b, c] = self.face_positions(f);
        (b - a).cross(c - a)
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_cross(f).length()
    }

    /// Unit face normal, `+Z` for zero-area faces.
    pub fn face_normal(&self, f: usize) -> DVec3 {
        self.face_cross(f).try_normalize().unwrap_or(DVec3::Z)
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Signed enclosed volume (positive for outward-oriented closed meshes).
    pub fn signed_volume(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.face_positions(f);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    pub fn bounding_box(&self) -> Option<(DVec3, DVec3)> {
        let first = *self.vertices.first()?;
        Some(
            self.vertices
                .iter()
                .fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v))),
        )
    }

    /// Applies `p -> p * scale + offset` to every vertex.
    pub fn transformed(&self, scale: f64, offset: DVec3) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| v * scale + offset).collect(),
            faces: self.faces.clone(),
            vertex_colors: self.vertex_colors.clone(),
        }
    }

    pub fn adjacency(&self) -> MeshAdjacency {
        MeshAdjacency::build(self)
    }
}

/// Result of [`normalize_to_unit`]; `original = normalized * scale + center`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub mesh: TriangleMesh,
    pub scale: f64,
    pub center: DVec3,
}

/// Centers the bounding box at the origin and scales its largest extent to 1.
///
/// A mesh whose bounding box has zero extent (a single point, or coincident
/// vertices) is only translated and reports `scale = 1`.
pub fn normalize_to_unit(mesh: &TriangleMesh) -> Result<Normalization> {
    let (lo, hi) = mesh
        .bounding_box()
        .ok_or_else(|| Error::InvalidMesh("cannot normalize a mesh without vertices".into()))?;
    let center = 0.5 * (lo + hi);
    let extent = (hi - lo).max_element();
    let scale = if extent > 0.0 { extent } else { 1.0 };
    let out = mesh.transformed(1.0 / scale, -center / scale);
    Ok(Normalization {
        mesh: out,
        scale,
        center,
    })
}

/// Area-weighted vertex normals. Vertices touching only zero-area faces (or
/// no faces at all) get `+Z`.
pub fn compute_vertex_normals(mesh: &TriangleMesh) -> Vec<DVec3> {
    let mut acc = vec![DVec3::ZERO; mesh.vertices.len()];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let n = mesh.face_cross(fi);
        for &v in f {
            acc[v as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| n.try_normalize().unwrap_or(DVec3::Z))
        .collect()
}

/// `steps` rounds of uniform Laplacian smoothing: each vertex moves by
/// `lambda` towards the centroid of its neighbors (Jacobi updates).
pub fn laplacian_smooth(mesh: &TriangleMesh, steps: usize, lambda: f64) -> TriangleMesh {
    let adj = mesh.adjacency();
    let mut out = mesh.clone();
    for _ in 0..steps {
        let prev = out.vertices.clone();
        for (v, nbrs) in adj.neighbors.iter().enumerate() {
            if nbrs.is_empty() {
                continue;
            }
            let c = nbrs.iter().map(|&w| prev[w as usize]).sum::<DVec3>() / nbrs.len() as f64;
            out.vertices[v] = prev[v] + lambda * (c - prev[v]);
        }
    }
    out
}

/// Drops vertices that no face references and remaps face indices.
pub fn remove_unreferenced_vertices(mesh: &TriangleMesh) -> TriangleMesh {
    let mut remap = vec![u32::MAX; mesh.vertices.len()];
    let mut vertices = Vec::new();
    let mut colors = mesh.vertex_colors.as_ref().map(|_| Vec::new());
    let mut faces = Vec::with_capacity(mesh.faces.len());
    for f in &mesh.faces {
        let mut nf = [0u32; 3];
        for (k, &v) in f.iter().enumerate() {
            let v = v as usize;
            if remap[v] == u32::MAX {
                remap[v] = vertices.len() as u32;
                vertices.push(mesh.vertices[v]);
                if let (Some(out), Some(src)) = (colors.as_mut(), mesh.vertex_colors.as_ref()) {
                    out.push(src[v]);
                }
            }
            nf[k] = remap[v];
        }
        faces.push(nf);
    }
    TriangleMesh {
        vertices,
        faces,
        vertex_colors: colors,
    }
}
