use std::collections::HashSet;

use serde::Serialize;

use super::{MeshAdjacency, TriangleMesh};

/// Topological health of a mesh.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifoldReport {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    /// Edges bounding more than two faces.
    pub non_manifold_edges: usize,
    /// Two-face edges traversed in the same direction by both faces.
    pub orientation_errors: usize,
    pub boundary_edges: usize,
    /// Vertices whose incident faces do not form a single fan or disk.
    pub non_manifold_vertices: usize,
    pub isolated_vertices: usize,
    pub duplicated_faces: usize,
    pub euler_characteristic: i64,
}

impl ManifoldReport {
    pub fn is_manifold(&self) -> bool {
        self.non_manifold_edges == 0
            && self.orientation_errors == 0
            && self.non_manifold_vertices == 0
            && self.duplicated_faces == 0
    }

    pub fn is_closed_manifold(&self) -> bool {
        self.is_manifold() && self.boundary_edges == 0
    }

    /// Genus of a closed connected orientable surface.
    pub fn genus(&self) -> i64 {
        (2 - self.euler_characteristic) / 2
    }
}

pub fn validate_manifold(mesh: &TriangleMesh) -> ManifoldReport {
    let adj = MeshAdjacency::build(mesh);

    let mut non_manifold_edges = 0;
    let mut orientation_errors = 0;
    let mut boundary_edges = 0;
    for e in &adj.edges {
        match e.faces.len() {
            1 => boundary_edges += 1,
            2 => {
                let d0 = traverses(&mesh.faces[e.faces[0] as usize], e.v[0], e.v[1]);
                let d1 = traverses(&mesh.faces[e.faces[1] as usize], e.v[0], e.v[1]);
                if d0 == d1 {
                    orientation_errors += 1;
                }
            }
            _ => non_manifold_edges += 1,
        }
    }

    let mut seen = HashSet::with_capacity(mesh.faces.len());
    let mut duplicated_faces = 0;
    for f in &mesh.faces {
        let mut key = *f;
        key.sort_unstable();
        if !seen.insert(key) {
            duplicated_faces += 1;
        }
    }

    let mut isolated_vertices = 0;
    let mut non_manifold_vertices = 0;
    for v in 0..mesh.vertices.len() {
        let faces = &adj.vertex_faces[v];
        if faces.is_empty() {
            isolated_vertices += 1;
        } else if !is_single_fan(mesh, v as u32, faces) {
            non_manifold_vertices += 1;
        }
    }

    ManifoldReport {
        vertices: mesh.vertices.len(),
        edges: adj.edges.len(),
        faces: mesh.faces.len(),
        non_manifold_edges,
        orientation_errors,
        boundary_edges,
        non_manifold_vertices,
        isolated_vertices,
        duplicated_faces,
        euler_characteristic: mesh.vertices.len() as i64 - adj.edges.len() as i64
            + mesh.faces.len() as i64,
    }
}

/// True if the face walks `a -> b` (rather than `b -> a`).
fn traverses(f: &[u32; 3], a: u32, b: u32) -> bool {
    (0..3).any(|k| f[k] == a && f[(k + 1) % 3] == b)
}

/// The link of `v` (opposite edges of its faces) must be one path or cycle.
fn is_single_fan(mesh: &TriangleMesh, v: u32, faces: &[u32]) -> bool {
    let mut link: Vec<(u32, u32)> = Vec::with_capacity(faces.len());
    for &fi in faces {
        let f = mesh.faces[fi as usize];
        let k = f.iter().position(|&x| x == v).unwrap();
        link.push((f[(k + 1) % 3], f[(k + 2) % 3]));
    }
    let mut nodes: Vec<u32> = link.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let index = |x: u32| nodes.binary_search(&x).unwrap();

    let mut degree = vec![0usize; nodes.len()];
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in &link {
        let (ia, ib) = (index(a), index(b));
        degree[ia] += 1;
        degree[ib] += 1;
        let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
        parent[ra] = rb;
    }
    if degree.iter().any(|&d| d > 2) {
        return false;
    }
    let root = find(&mut parent, 0);
    (1..nodes.len()).all(|i| find(&mut parent, i) == root)
}
