use std::collections::HashMap;

use smallvec::SmallVec;

use super::TriangleMesh;

/// Undirected edge `v[0] < v[1]` with the faces it bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub v: [u32; 2],
    pub faces: SmallVec<[u32; 2]>,
}

/// Vertex and edge incidence derived from a [`TriangleMesh`].
///
/// Neighbor and face lists are sorted ascending; edges are sorted by their
/// vertex pair, so the structure is a pure function of the face list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshAdjacency {
    pub neighbors: Vec<Vec<u32>>,
    pub vertex_faces: Vec<Vec<u32>>,
    pub edges: Vec<Edge>,
    edge_index: HashMap<(u32, u32), u32>,
}

impl MeshAdjacency {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let n = mesh.vertices.len();
        let mut vertex_faces = vec![Vec::new(); n];
        let mut pairs: Vec<((u32, u32), u32)> = Vec::with_capacity(mesh.faces.len() * 3);
        for (fi, f) in mesh.faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                vertex_faces[a as usize].push(fi as u32);
                pairs.push(((a.min(b), a.max(b)), fi as u32));
            }
        }
        pairs.sort_unstable();

        let mut edges: Vec<Edge> = Vec::new();
        for (key, fi) in pairs {
            match edges.last_mut() {
                Some(e) if (e.v[0], e.v[1]) == key => e.faces.push(fi),
                _ => edges.push(Edge {
                    v: [key.0, key.1],
                    faces: SmallVec::from_slice(&[fi]),
                }),
            }
        }

        let mut neighbors = vec![Vec::new(); n];
        let mut edge_index = HashMap::with_capacity(edges.len());
        for (ei, e) in edges.iter().enumerate() {
            neighbors[e.v[0] as usize].push(e.v[1]);
            neighbors[e.v[1] as usize].push(e.v[0]);
            edge_index.insert((e.v[0], e.v[1]), ei as u32);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        for list in &mut vertex_faces {
            list.dedup();
        }

        Self {
            neighbors,
            vertex_faces,
            edges,
            edge_index,
        }
    }

    pub fn edge(&self, a: u32, b: u32) -> Option<&Edge> {
        self.edge_index
            .get(&(a.min(b), a.max(b)))
            .map(|&i| &self.edges[i as usize])
    }

    pub fn valence(&self, v: u32) -> usize {
        self.neighbors[v as usize].len()
    }

    /// Connected components over the vertex graph; isolated vertices form
    /// their own component. Returns a component id per vertex and the count.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.neighbors.len();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = count;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &w in &self.neighbors[v] {
                    if comp[w as usize] == usize::MAX {
                        comp[w as usize] = count;
                        stack.push(w as usize);
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }
}
