//! Randomized remeshing checks shared by the remesh tests and the
//! acceptance run.
#![allow(dead_code)]

use std::path::Path;

use glam::DVec3;
use meshloop::mesh::{load_mesh, validate_manifold};
use meshloop::remesh::{remesh_pass, RemeshParams};
use meshloop::TriangleMesh;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const CORPUS: [&str; 5] = ["cube.obj", "icosphere.obj", "torus.obj", "capsule.obj", "rock.obj"];

pub fn corpus() -> Vec<(String, TriangleMesh)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets/corpus");
    CORPUS
        .iter()
        .map(|name| (name.to_string(), load_mesh(dir.join(name)).unwrap()))
        .collect()
}

/// Jitters every vertex by up to `amount` times its shortest incident edge,
/// which keeps faces from folding over.
pub fn jitter(mesh: &TriangleMesh, amount: f64, rng: &mut ChaCha8Rng) -> TriangleMesh {
    let adj = mesh.adjacency();
    let mut out = mesh.clone();
    for (v, p) in out.vertices.iter_mut().enumerate() {
        let shortest = adj.neighbors[v]
            .iter()
            .map(|&w| mesh.vertices[v].distance(mesh.vertices[w as usize]))
            .fold(f64::INFINITY, f64::min);
        let dir = DVec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        *p += amount * shortest * dir / 3f64.sqrt();
    }
    out
}

/// One remesh pass with the given parameters; checks closedness, genus,
/// vertex and face bookkeeping, and face areas.
pub fn checked_pass(mesh: &TriangleMesh, params: &RemeshParams) -> Result<TriangleMesh, String> {
    let before = validate_manifold(mesh);
    let out = remesh_pass(mesh, params).map_err(|e| e.to_string())?;
    let after = validate_manifold(&out.mesh);
    if !after.is_closed_manifold() {
        return Err(format!("output not a closed manifold: {after:?}"));
    }
    if after.genus() != before.genus() {
        return Err(format!("genus {} became {}", before.genus(), after.genus()));
    }
    let c = out.counts;
    let faces = (mesh.face_count() + 2 * c.splits) as i64 - 2 * c.collapses as i64;
    let verts = (mesh.vertex_count() + c.splits) as i64 - c.collapses as i64;
    if faces != out.mesh.face_count() as i64 || verts != out.mesh.vertex_count() as i64 {
        return Err(format!(
            "{c:?} took {}v/{}f to {}v/{}f",
            mesh.vertex_count(),
            mesh.face_count(),
            out.mesh.vertex_count(),
            out.mesh.face_count()
        ));
    }
    if let Some(f) = (0..out.mesh.face_count()).find(|&f| !(out.mesh.face_area(f) > 1e-12)) {
        return Err(format!("face {f} has zero area"));
    }
    Ok(out.mesh)
}

pub fn random_params(rng: &mut ChaCha8Rng) -> RemeshParams {
    RemeshParams {
        target_edge_length: rng.random_range(0.02..0.2),
        smoothing_lambda: rng.random_range(0.05..0.95),
        ..RemeshParams::default()
    }
}
