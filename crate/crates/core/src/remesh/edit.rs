//! Mutable triangle soup with vertex-face incidence for local edits.

use glam::DVec3;
use smallvec::SmallVec;

use crate::mesh::TriangleMesh;

pub(crate) const MIN_AREA: f64 = 1e-12;

pub(crate) struct EditMesh {
    pub pos: Vec<DVec3>,
    pub faces: Vec<[u32; 3]>,
    pub face_alive: Vec<bool>,
    pub vert_alive: Vec<bool>,
    pub vert_faces: Vec<SmallVec<[u32; 8]>>,
    /// Number of vertices in the input mesh; indices below this are original.
    pub original_count: usize,
    alive: usize,
}

impl EditMesh {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let mut vert_faces = vec![SmallVec::new(); mesh.vertices.len()];
        for (fi, f) in mesh.faces.iter().enumerate() {
            for &v in f {
                vert_faces[v as usize].push(fi as u32);
            }
        }
        Self {
            pos: mesh.vertices.clone(),
            faces: mesh.faces.clone(),
            face_alive: vec![true; mesh.faces.len()],
            vert_alive: vec![true; mesh.vertices.len()],
            vert_faces,
            original_count: mesh.vertices.len(),
            alive: mesh.vertices.len(),
        }
    }

    pub fn alive_vertex_count(&self) -> usize {
        self.alive
    }

    pub fn length(&self, a: u32, b: u32) -> f64 {
        self.pos[a as usize].distance(self.pos[b as usize])
    }

    /// Alive faces containing both `a` and `b`.
    pub fn edge_faces(&self, a: u32, b: u32) -> SmallVec<[u32; 2]> {
        self.vert_faces[a as usize]
            .iter()
            .copied()
            .filter(|&f| self.faces[f as usize].contains(&b))
            .collect()
    }

    /// Sorted unique neighbors of `v`.
    pub fn neighbors(&self, v: u32) -> SmallVec<[u32; 12]> {
        let mut out: SmallVec<[u32; 12]> = SmallVec::new();
        for &f in &self.vert_faces[v as usize] {
            for &w in &self.faces[f as usize] {
                if w != v {
                    out.push(w);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn valence(&self, v: u32) -> usize {
        self.neighbors(v).len()
    }

    /// Unique edges `(a < b)` sorted by vertex pair.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.faces.len() * 3 / 2);
        for (fi, f) in self.faces.iter().enumerate() {
            if !self.face_alive[fi] {
                continue;
            }
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                out.push((a.min(b), a.max(b)));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn face_cross_with(&self, f: u32, moved: u32, to: DVec3) -> DVec3 {
        let p = self.faces[f as usize].map(|v| if v == moved { to } else { self.pos[v as usize] });
        (p[1] - p[0]).cross(p[2] - p[0])
    }

    pub fn face_cross(&self, f: u32) -> DVec3 {
        let p = self.faces[f as usize].map(|v| self.pos[v as usize]);
        (p[1] - p[0]).cross(p[2] - p[0])
    }

    pub fn vertex_normal(&self, v: u32) -> DVec3 {
        self.vert_faces[v as usize]
            .iter()
            .map(|&f| self.face_cross(f))
            .sum::<DVec3>()
            .try_normalize()
            .unwrap_or(DVec3::Z)
    }

    fn push_face(&mut self, f: [u32; 3]) -> u32 {
        let id = self.faces.len() as u32;
        self.faces.push(f);
        self.face_alive.push(true);
        for &v in &f {
            self.vert_faces[v as usize].push(id);
        }
        id
    }

    fn detach(&mut self, v: u32, f: u32) {
        let list = &mut self.vert_faces[v as usize];
        if let Some(k) = list.iter().position(|&x| x == f) {
            list.remove(k);
        }
    }

    /// Inserts the midpoint of edge `a-b`, splitting each adjacent face in two.
    pub fn split(&mut self, a: u32, b: u32) -> u32 {
        let m = self.pos.len() as u32;
        self.pos.push(0.5 * (self.pos[a as usize] + self.pos[b as usize]));
        self.vert_alive.push(true);
        self.alive += 1;
        self.vert_faces.push(SmallVec::new());
        for f in self.edge_faces(a, b) {
            let face = self.faces[f as usize];
            let k = (0..3)
                .find(|&k| {
                    let (x, y) = (face[k], face[(k + 1) % 3]);
                    (x == a && y == b) || (x == b && y == a)
                })
                .unwrap();
            let (x, y, z) = (face[k], face[(k + 1) % 3], face[(k + 2) % 3]);
            self.faces[f as usize] = [x, m, z];
            self.detach(y, f);
            self.vert_faces[m as usize].push(f);
            self.push_face([m, y, z]);
        }
        m
    }

    /// Merges `a` into `b` and moves `b` to `to`. Faces holding both die.
    pub fn collapse(&mut self, a: u32, b: u32, to: DVec3) {
        let shared = self.edge_faces(a, b);
        for &f in &shared {
            self.face_alive[f as usize] = false;
            for v in self.faces[f as usize] {
                if v != a {
                    self.detach(v, f);
                }
            }
        }
        let moved: SmallVec<[u32; 8]> = self.vert_faces[a as usize]
            .iter()
            .copied()
            .filter(|f| !shared.contains(f))
            .collect();
        for f in moved {
            for v in &mut self.faces[f as usize] {
                if *v == a {
                    *v = b;
                }
            }
            self.vert_faces[b as usize].push(f);
        }
        self.vert_faces[a as usize].clear();
        self.vert_alive[a as usize] = false;
        self.alive -= 1;
        self.pos[b as usize] = to;
    }

    /// Third vertices of the faces `(a, b, c)` and `(b, a, d)` on edge `a-b`.
    pub fn opposite_pair(&self, a: u32, b: u32) -> Option<(u32, u32, u32, u32)> {
        let faces = self.edge_faces(a, b);
        if faces.len() != 2 {
            return None;
        }
        let (mut c, mut d) = (None, None);
        let (mut fc, mut fd) = (0, 0);
        for &f in &faces {
            let face = self.faces[f as usize];
            let k = face.iter().position(|&v| v == a).unwrap();
            let third = face.iter().copied().find(|&v| v != a && v != b).unwrap();
            if face[(k + 1) % 3] == b {
                c = Some(third);
                fc = f;
            } else {
                d = Some(third);
                fd = f;
            }
        }
        Some((c?, d?, fc, fd))
    }

    /// Replaces diagonal `a-b` of the quad `a, d, b, c` with `c-d`.
    pub fn flip(&mut self, a: u32, b: u32) -> bool {
        let Some((c, d, fc, fd)) = self.opposite_pair(a, b) else {
            return false;
        };
        self.faces[fc as usize] = [c, a, d];
        self.faces[fd as usize] = [d, b, c];
        self.detach(a, fd);
        self.detach(b, fc);
        self.vert_faces[c as usize].push(fd);
        self.vert_faces[d as usize].push(fc);
        true
    }

    /// Compacts into a mesh plus the old-to-new map for original vertices.
    pub fn finish(self) -> (TriangleMesh, Vec<Option<usize>>) {
        let mut remap = vec![u32::MAX; self.pos.len()];
        let mut vertices = Vec::new();
        for (v, alive) in self.vert_alive.iter().enumerate() {
            if *alive && !self.vert_faces[v].is_empty() {
                remap[v] = vertices.len() as u32;
                vertices.push(self.pos[v]);
            }
        }
        let faces = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, &alive)| alive)
            .map(|(f, _)| f.map(|v| remap[v as usize]))
            .collect();
        let provenance = (0..self.original_count)
            .map(|v| (remap[v] != u32::MAX).then_some(remap[v] as usize))
            .collect();
        (TriangleMesh::new(vertices, faces), provenance)
    }
}
