//! Isotropic remeshing between optimization steps: split, collapse, flip and
//! tangential relocation on closed manifold meshes.

pub(crate) mod edit;

use std::collections::BTreeMap;

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{validate_manifold, TriangleMesh};
use edit::{EditMesh, MIN_AREA};


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemeshParams {
    pub target_edge_length: f64,
    pub split_factor: f64,
    pub collapse_factor: f64,
    pub smoothing_lambda: f64,
    /// Upper bound on valence-improving flips per pass.
    pub max_valence_flips: usize,
}

impl Default for RemeshParams {
    fn default() -> Self {
        Self {
            target_edge_length: 0.05,
            split_factor: 4.0 / 3.0,
            collapse_factor: 4.0 / 5.0,
            smoothing_lambda: 0.5,
            max_valence_flips: usize::MAX,
        }
    }
}

impl RemeshParams {
    pub fn with_target(target_edge_length: f64) -> Self {
        Self {
            target_edge_length,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.target_edge_length.is_finite()
            && self.target_edge_length > 0.0
            && 0.0 < self.collapse_factor
            && self.collapse_factor < 1.0
            && 1.0 < self.split_factor
            && self.split_factor.is_finite()
            && self.smoothing_lambda > 0.0
            && self.smoothing_lambda < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid remesh parameters {self:?}")))
        }
    }

    fn split_length(&self) -> f64 {
        self.split_factor * self.target_edge_length
    }

    fn collapse_length(&self) -> f64 {
        self.collapse_factor * self.target_edge_length
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RemeshCounts {
    pub splits: usize,
    pub collapses: usize,
    pub flips: usize,
}

impl RemeshCounts {
    pub fn topology_edits(&self) -> usize {
        self.splits + self.collapses + self.flips
    }
}

#[derive(Debug, Clone)]
pub struct RemeshOutput {
    pub mesh: TriangleMesh,
    /// For every input vertex, its index in `mesh` if it survived.
    pub provenance: Vec<Option<usize>>,
    pub counts: RemeshCounts,
}

/// One remeshing pass. Rejects meshes that are not closed, consistently
/// oriented 2-manifolds.
pub fn remesh_pass(mesh: &TriangleMesh, params: &RemeshParams) -> Result<RemeshOutput> {
    params.validate()?;
    require_closed_manifold(mesh)?;
    let mut em = EditMesh::new(mesh);
    let mut counts = RemeshCounts {
        splits: split_long_edges(&mut em, params.split_length()),
        ..Default::default()
    };
    counts.collapses = collapse_short_edges(&mut em, params.collapse_length(), params.split_length());
    counts.flips = equalize_valences(&mut em, params.max_valence_flips, params.split_length());
    relocate_tangentially(&mut em, params.smoothing_lambda, params.split_length());
    let (mesh, provenance) = em.finish();
    Ok(RemeshOutput {
        mesh,
        provenance,
        counts,
    })
}

/// Only the split phase: every edge longer than `max_length` is bisected,
/// longest first, until none remain.
pub fn split_pass(mesh: &TriangleMesh, max_length: f64) -> Result<(TriangleMesh, usize)> {
    if !(max_length > 0.0) {
        return Err(Error::InvalidArgument(format!("split length must be positive, got {max_length}")));
    }
    require_closed_manifold(mesh)?;
    let mut em = EditMesh::new(mesh);
    let n = split_long_edges(&mut em, max_length);
    Ok((em.finish().0, n))
}

pub(crate) fn require_closed_manifold(mesh: &TriangleMesh) -> Result<()> {
    mesh.validate_indices()?;
    let report = validate_manifold(mesh);
    if !report.is_closed_manifold() {
        return Err(Error::NonManifold(format!(
            "remeshing needs a closed consistently oriented manifold: {} non-manifold edges, {} boundary edges, \
             {} orientation errors, {} non-manifold vertices",
            report.non_manifold_edges, report.boundary_edges, report.orientation_errors, report.non_manifold_vertices
        )));
    }
    Ok(())
}

fn split_long_edges(em: &mut EditMesh, max_len: f64) -> usize {
    let mut count = 0;
    loop {
        let mut long: Vec<(f64, u32, u32)> = em
            .edges()
            .into_iter()
            .map(|(a, b)| (em.length(a, b), a, b))
            .filter(|e| e.0 > max_len)
            .collect();
        if long.is_empty() {
            return count;
        }
        long.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        for (_, a, b) in long {
            // an earlier split in this round may have removed the edge
            if em.edge_faces(a, b).is_empty() {
                continue;
            }
            em.split(a, b);
            count += 1;
        }
    }
}

/// Topological and geometric legality of merging `a` into `b` at `to`.
pub(crate) fn collapse_allowed(em: &EditMesh, a: u32, b: u32, to: DVec3, max_len: f64) -> bool {
    let shared = em.edge_faces(a, b);
    if shared.len() != 2 || em.alive_vertex_count() <= 4 {
        return false;
    }
    // link condition: common neighbors are exactly the two opposite vertices
    let na = em.neighbors(a);
    let nb = em.neighbors(b);
    let common = na.iter().filter(|v| nb.binary_search(v).is_ok()).count();
    if common != 2 {
        return false;
    }
    for &v in na.iter().chain(nb.iter()) {
        if v != a && v != b && em.pos[v as usize].distance(to) > max_len {
            return false;
        }
    }
    for &v in [a, b].iter() {
        for &f in &em.vert_faces[v as usize] {
            if shared.contains(&f) {
                continue;
            }
            let before = em.face_cross(f);
            let p = em.faces[f as usize].map(|w| if w == a || w == b { to } else { em.pos[w as usize] });
            let after = (p[1] - p[0]).cross(p[2] - p[0]);
            if 0.5 * after.length() < MIN_AREA || before.dot(after) <= 0.0 {
                return false;
            }
        }
    }
    true
}

fn collapse_short_edges(em: &mut EditMesh, min_len: f64, max_len: f64) -> usize {
    let mut count = 0;
    loop {
        let mut short: Vec<(f64, u32, u32)> = em
            .edges()
            .into_iter()
            .map(|(a, b)| (em.length(a, b), a, b))
            .filter(|e| e.0 < min_len)
            .collect();
        short.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut done = 0;
        for (_, a, b) in short {
            if !em.vert_alive[a as usize] || !em.vert_alive[b as usize] || em.length(a, b) >= min_len {
                continue;
            }
            let mid = 0.5 * (em.pos[a as usize] + em.pos[b as usize]);
            // keep the lower index so original vertices tend to survive
            let (drop, keep) = (a.max(b), a.min(b));
            if collapse_allowed(em, drop, keep, mid, max_len) {
                em.collapse(drop, keep, mid);
                done += 1;
            }
        }
        count += done;
        if done == 0 {
            return count;
        }
    }
}

fn valence_deviation(v: [usize; 4]) -> i64 {
    v.iter().map(|&k| (k as i64 - 6).pow(2)).sum()
}

fn flip_allowed(em: &EditMesh, a: u32, b: u32, max_len: f64) -> bool {
    let Some((c, d, fc, fd)) = em.opposite_pair(a, b) else {
        return false;
    };
    if c == d || !em.edge_faces(c, d).is_empty() || em.length(c, d) > max_len {
        return false;
    }
    let (va, vb) = (em.valence(a), em.valence(b));
    if va <= 3 || vb <= 3 {
        return false;
    }
    let before = valence_deviation([va, vb, em.valence(c), em.valence(d)]);
    let after = valence_deviation([va - 1, vb - 1, em.valence(c) + 1, em.valence(d) + 1]);
    if after >= before {
        return false;
    }
    let (nc, nd) = (em.face_cross(fc), em.face_cross(fd));
    // do not fold across creases
    if nc.normalize_or_zero().dot(nd.normalize_or_zero()) < 0.5 {
        return false;
    }
    let p = |v: u32| em.pos[v as usize];
    for tri in [[c, a, d], [d, b, c]] {
        let n = (p(tri[1]) - p(tri[0])).cross(p(tri[2]) - p(tri[0]));
        if 0.5 * n.length() < MIN_AREA || n.dot(nc) <= 0.0 || n.dot(nd) <= 0.0 {
            return false;
        }
    }
    true
}

fn equalize_valences(em: &mut EditMesh, budget: usize, max_len: f64) -> usize {
    let mut count = 0;
    for _round in 0..8 {
        let mut done = 0;
        let mut edges: Vec<(f64, u32, u32)> = em.edges().into_iter().map(|(a, b)| (em.length(a, b), a, b)).collect();
        edges.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        for (_, a, b) in edges {
            if count >= budget {
                return count;
            }
            if flip_allowed(em, a, b, max_len) && em.flip(a, b) {
                count += 1;
                done += 1;
            }
        }
        if done == 0 {
            break;
        }
    }
    count
}

fn relocate_tangentially(em: &mut EditMesh, lambda: f64, max_len: f64) {
    for v in 0..em.pos.len() as u32 {
        if !em.vert_alive[v as usize] || em.vert_faces[v as usize].is_empty() {
            continue;
        }
        let nbrs = em.neighbors(v);
        let p = em.pos[v as usize];
        let centroid = nbrs.iter().map(|&w| em.pos[w as usize]).sum::<DVec3>() / nbrs.len() as f64;
        let n = em.vertex_normal(v);
        let d = centroid - p;
        let tangential = d - n * n.dot(d);
        let mut step = lambda;
        for _ in 0..4 {
            let to = p + step * tangential;
            let edges_ok = nbrs.iter().all(|&w| {
                let q = em.pos[w as usize];
                q.distance(to) <= max_len.max(q.distance(p))
            });
            let faces_ok = em.vert_faces[v as usize].iter().all(|&f| {
                let before = em.face_cross(f);
                let after = em.face_cross_with(f, v, to);
                0.5 * after.length() >= MIN_AREA && before.dot(after) > 0.0
            });
            if edges_ok && faces_ok {
                em.pos[v as usize] = to;
                break;
            }
            step *= 0.5;
        }
    }
}

/// Edge-length and valence summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeStatistics {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub stddev: f64,
    /// valence -> number of vertices
    pub valence_histogram: BTreeMap<usize, usize>,
}

pub fn edge_statistics(mesh: &TriangleMesh) -> Result<EdgeStatistics> {
    mesh.validate_indices()?;
    let adj = mesh.adjacency();
    let lengths: Vec<f64> = adj
        .edges
        .iter()
        .map(|e| mesh.vertices[e.v[0] as usize].distance(mesh.vertices[e.v[1] as usize]))
        .collect();
    let count = lengths.len();
    let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &l in &lengths {
        min = min.min(l);
        max = max.max(l);
        sum += l;
    }
    let (mean, stddev) = if count == 0 {
        (0.0, 0.0)
    } else {
        let mean = sum / count as f64;
        let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / count as f64;
        (mean, var.sqrt())
    };
    let mut valence_histogram = BTreeMap::new();
    for v in 0..mesh.vertex_count() {
        let k = adj.valence(v as u32);
        if k > 0 {
            *valence_histogram.entry(k).or_insert(0) += 1;
        }
    }
    Ok(EdgeStatistics {
        count,
        min: if count == 0 { 0.0 } else { min },
        max: if count == 0 { 0.0 } else { max },
        mean,
        stddev,
        valence_histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    fn euler(m: &TriangleMesh) -> i64 {
        validate_manifold(m).euler_characteristic
    }

    #[test]
    fn icosahedron_edges_are_equal() {
        let s = edge_statistics(&primitives::icosahedron()).unwrap();
        assert_eq!(s.count, 30);
        assert!(s.max - s.min < 1e-6);
        assert_eq!(s.valence_histogram.get(&5), Some(&12));
    }

    #[test]
    fn cube_valences_follow_triangulation() {
        let s = edge_statistics(&primitives::cube()).unwrap();
        // two corners on the split diagonals' shared ends, six elsewhere
        assert_eq!(s.valence_histogram.get(&6), Some(&2));
        assert_eq!(s.valence_histogram.get(&4), Some(&6));
    }

    #[test]
    fn band_mesh_keeps_topology_and_moves_little() {
        let sphere = primitives::icosphere(2);
        let stats = edge_statistics(&sphere).unwrap();
        let params = RemeshParams::with_target(stats.mean);
        assert!(stats.min > params.collapse_length() && stats.max < params.split_length());
        let out = remesh_pass(&sphere, &params).unwrap();
        assert_eq!(out.counts, RemeshCounts::default());
        assert_eq!(out.mesh.faces, sphere.faces);
        let adj = sphere.adjacency();
        for v in 0..sphere.vertex_count() {
            let local = adj.neighbors[v]
                .iter()
                .map(|&w| sphere.vertices[v].distance(sphere.vertices[w as usize]))
                .fold(0.0, f64::max);
            let moved = sphere.vertices[v].distance(out.mesh.vertices[v]);
            assert!(moved <= params.smoothing_lambda * local + 1e-12);
        }
    }

    #[test]
    fn halving_target_roughly_quadruples_faces() {
        let sphere = primitives::icosphere(2);
        let mean = edge_statistics(&sphere).unwrap().mean;
        let out = remesh_pass(&sphere, &RemeshParams::with_target(mean / 2.0)).unwrap();
        let ratio = out.mesh.face_count() as f64 / sphere.face_count() as f64;
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
        assert_eq!(euler(&out.mesh), 2);
    }

    #[test]
    fn output_respects_split_bound_and_stays_manifold() {
        for (mesh, target) in [
            (primitives::cube(), 0.1),
            (primitives::torus(0.35, 0.15, 24, 12), 0.04),
            (primitives::icosphere(3), 0.3),
        ] {
            let genus = validate_manifold(&mesh).genus();
            let params = RemeshParams::with_target(target);
            let out = remesh_pass(&mesh, &params).unwrap();
            let report = validate_manifold(&out.mesh);
            assert!(report.is_closed_manifold(), "{report:?}");
            assert_eq!(report.genus(), genus);
            let s = edge_statistics(&out.mesh).unwrap();
            assert!(s.max <= params.split_length() * (1.0 + 1e-6), "max {} target {target}", s.max);
            for f in 0..out.mesh.face_count() {
                assert!(out.mesh.face_area(f) > 1e-12);
            }
        }
    }

    #[test]
    fn provenance_points_at_same_or_relocated_vertex() {
        let mesh = primitives::icosphere(3);
        let out = remesh_pass(&mesh, &RemeshParams::with_target(0.2)).unwrap();
        assert_eq!(out.provenance.len(), mesh.vertex_count());
        let mut seen = std::collections::HashSet::new();
        for (old, new) in out.provenance.iter().enumerate() {
            if let Some(n) = *new {
                assert!(seen.insert(n));
                assert!(mesh.vertices[old].distance(out.mesh.vertices[n]) < 0.5);
            }
        }
        assert!(out.counts.collapses > 0);
    }

    #[test]
    fn rejects_open_meshes_and_bad_params() {
        assert!(matches!(
            remesh_pass(&primitives::grid(3, 3, 1.0), &RemeshParams::default()),
            Err(Error::NonManifold(_))
        ));
        let bad = RemeshParams {
            collapse_factor: 1.2,
            ..Default::default()
        };
        assert!(remesh_pass(&primitives::cube(), &bad).is_err());
    }

    #[test]
    fn second_pass_changes_few_edges() {
        let mesh = primitives::bumpy_sphere(3, 0.1, 3.0);
        let params = RemeshParams::with_target(0.12);
        let once = remesh_pass(&mesh, &params).unwrap();
        let twice = remesh_pass(&once.mesh, &params).unwrap();
        let edges = once.mesh.adjacency().edges.len();
        let frac = twice.counts.topology_edits() as f64 / edges as f64;
        assert!(frac < 0.05, "second pass touched {frac}");
    }
}
