//! Procedural meshes used as references, initializers and test fixtures.

use std::collections::HashMap;
use std::f64::consts::TAU;

use glam::DVec3;

use super::TriangleMesh;

/// Axis-aligned cube `[-0.5, 0.5]^3`, 8 vertices and 12 faces.
///
/// Vertex `i` sits at corner `(i & 1, (i >> 1) & 1, (i >> 2) & 1) - 0.5`.
/// Faces on the `-` sides are split along a diagonal through vertex 0, faces
/// on the `+` sides along a diagonal through vertex 7, so those two corners
/// have valence 6 and every other corner valence 4.
pub fn cube() -> TriangleMesh {
    let vertices = (0..8)
        .map(|i| {
            DVec3::new(
                (i & 1) as f64 - 0.5,
                ((i >> 1) & 1) as f64 - 0.5,
                ((i >> 2) & 1) as f64 - 0.5,
            )
        })
        .collect();
    let faces = vec![
        [0, 2, 3],
        [0, 3, 1],
        [4, 5, 7],
        [4, 7, 6],
        [0, 1, 5],
        [0, 5, 4],
        [2, 7, 3],
        [2, 6, 7],
        [0, 4, 6],
        [0, 6, 2],
        [1, 3, 7],
        [1, 7, 5],
    ];
    TriangleMesh::new(vertices, faces)
}

/// Regular icosahedron inscribed in the unit sphere.
pub fn icosahedron() -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ];
    let vertices = raw
        .iter()
        .map(|&(x, y, z)| DVec3::new(x, y, z).normalize())
        .collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    TriangleMesh::new(vertices, faces)
}

/// Unit-radius icosphere; `20 * 4^level` faces.
pub fn icosphere(level: u32) -> TriangleMesh {
    let mut mesh = icosahedron();
    for _ in 0..level {
        mesh = subdivide_midpoint(&mesh, true);
    }
    mesh
}

/// 1-to-4 midpoint subdivision. With `project_to_sphere`, new vertices are
/// pushed onto the unit sphere.
pub fn subdivide_midpoint(mesh: &TriangleMesh, project_to_sphere: bool) -> TriangleMesh {
    let mut vertices = mesh.vertices.clone();
    let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
    let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<DVec3>| -> u32 {
        let key = (a.min(b), a.max(b));
        *cache.entry(key).or_insert_with(|| {
            let mut p = 0.5 * (vertices[a as usize] + vertices[b as usize]);
            if project_to_sphere {
                p = p.normalize();
            }
            vertices.push(p);
            (vertices.len() - 1) as u32
        })
    };
    let mut faces = Vec::with_capacity(mesh.faces.len() * 4);
    for &[a, b, c] in &mesh.faces {
        let ab = midpoint(a, b, &mut vertices);
        let bc = midpoint(b, c, &mut vertices);
        let ca = midpoint(c, a, &mut vertices);
        faces.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    TriangleMesh::new(vertices, faces)
}

/// Torus around the Z axis with `major_segments * minor_segments * 2` faces.
pub fn torus(major: f64, minor: f64, major_segments: u32, minor_segments: u32) -> TriangleMesh {
    let (nu, nv) = (major_segments, minor_segments);
    let mut vertices = Vec::with_capacity((nu * nv) as usize);
    for i in 0..nu {
        let u = TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let v = TAU * j as f64 / nv as f64;
            let ring = major + minor * v.cos();
            vertices.push(DVec3::new(ring * u.cos(), ring * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: u32, j: u32| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity((2 * nu * nv) as usize);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// Flat grid of `nx * ny` vertices in the `z = 0` plane, spanning
/// `[-size/2, size/2]^2`, faces pointing `+Z`.
pub fn grid(nx: u32, ny: u32, size: f64) -> TriangleMesh {
    assert!(nx >= 2 && ny >= 2, "grid needs at least 2x2 vertices");
    let mut vertices = Vec::with_capacity((nx * ny) as usize);
    for j in 0..ny {
        for i in 0..nx {
            vertices.push(DVec3::new(
                size * (i as f64 / (nx - 1) as f64 - 0.5),
                size * (j as f64 / (ny - 1) as f64 - 0.5),
                0.0,
            ));
        }
    }
    let idx = |i: u32, j: u32| j * nx + i;
    let mut faces = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// Square `[-size/2, size/2]^2` at height `z`, two faces pointing `+Z`.
pub fn quad(size: f64, z: f64) -> TriangleMesh {
    let h = 0.5 * size;
    TriangleMesh::new(
        vec![
            DVec3::new(-h, -h, z),
            DVec3::new(h, -h, z),
            DVec3::new(h, h, z),
            DVec3::new(-h, h, z),
        ],
        vec![[0, 1, 2], [0, 2, 3]],
    )
}

/// Icosphere with a smooth radial displacement, a stand-in for organic scans.
pub fn bumpy_sphere(level: u32, amplitude: f64, frequency: f64) -> TriangleMesh {
    let mut mesh = icosphere(level);
    for v in &mut mesh.vertices {
        let bump = (frequency * v.x).sin() * (frequency * v.y).sin() * (frequency * v.z).sin()
            + 0.5 * (0.5 * frequency * (v.x + v.z)).cos();
        *v *= 1.0 + amplitude * bump;
    }
    mesh
}

/// Capsule along X: cylinder of `length` with hemispherical caps of `radius`.
pub fn capsule(radius: f64, length: f64, level: u32) -> TriangleMesh {
    let mut mesh = icosphere(level);
    let half = 0.5 * length;
    for v in &mut mesh.vertices {
        let shift = if v.x >= 0.0 { half } else { -half };
        // stretch the equatorial band linearly so the cylinder part is sampled too
        let t = (v.x.abs() / 0.35).min(1.0);
        *v = DVec3::new(v.x * radius + shift * t, v.y * radius, v.z * radius);
    }
    mesh
}
