//! Analytic loss gradients against central finite differences, shared by
//! the gradient tests and the acceptance run.
#![allow(dead_code)]

use glam::DVec3;
use meshloop::mesh::{primitives, TriangleMesh};
use meshloop::oracle::{SupervisionSet, SupervisionSource, SupervisionView};
use meshloop::refine::{evaluate, laplacian_loss, mask_loss, LossWeights, MASK_THRESHOLD};
use meshloop::render::{backward_parts, rasterize, CameraView, NO_FACE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-4;

pub fn random_mesh(rng: &mut ChaCha8Rng) -> TriangleMesh {
    let mut m = primitives::icosphere(1);
    for v in &mut m.vertices {
        *v *= 0.4 * rng.random_range(0.85..1.15);
    }
    m
}

pub fn random_views(rng: &mut ChaCha8Rng, n: usize) -> Vec<CameraView> {
    (0..n)
        .map(|_| CameraView::new(rng.random_range(0.0..360.0), rng.random_range(-40.0..40.0), 1.5, 40.0, 64))
        .collect()
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> DVec3 {
    loop {
        let v = DVec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if v.length_squared() > 0.01 && v.length_squared() <= 1.0 {
            return v.normalize();
        }
    }
}

pub fn random_targets(rng: &mut ChaCha8Rng, views: &[CameraView]) -> SupervisionSet {
    let targets = views
        .iter()
        .map(|v| {
            let n = v.width * v.height;
            let mask: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let normal = mask
                .iter()
                .map(|&m| if m >= MASK_THRESHOLD { random_unit(rng) } else { DVec3::ZERO })
                .collect();
            SupervisionView {
                width: v.width,
                height: v.height,
                normal,
                mask,
                color: None,
            }
        })
        .collect();
    SupervisionSet {
        views: views.to_vec(),
        targets,
        source: SupervisionSource::External,
    }
}

/// Normal loss with the pixel-to-face assignment and overlap sets of the
/// unperturbed render held fixed, computed straight from face geometry.
pub fn frozen_normal_loss(mesh: &TriangleMesh, frozen: &[(Vec<usize>, Vec<u32>)], sup: &SupervisionSet) -> f64 {
    let mut total = 0.0;
    for ((pixels, faces), t) in frozen.iter().zip(&sup.targets) {
        if pixels.is_empty() {
            continue;
        }
        let mut sum = 0.0;
        for (&i, &f) in pixels.iter().zip(faces) {
            let n = mesh.face_cross(f as usize).normalize();
            sum += (n - t.normal[i]).length_squared();
        }
        total += sum / pixels.len() as f64;
    }
    total
}

pub fn freeze(mesh: &TriangleMesh, sup: &SupervisionSet) -> Vec<(Vec<usize>, Vec<u32>)> {
    sup.views
        .iter()
        .zip(&sup.targets)
        .map(|(v, t)| {
            let maps = rasterize(mesh, v);
            let pixels: Vec<usize> = (0..maps.pixel_count())
                .filter(|&i| {
                    maps.face_id[i] != NO_FACE
                        && maps.mask[i] >= MASK_THRESHOLD
                        && t.mask[i] >= MASK_THRESHOLD
                        && t.normal[i] != DVec3::ZERO
                })
                .collect();
            let faces = pixels.iter().map(|&i| maps.face_id[i]).collect();
            (pixels, faces)
        })
        .collect()
}

/// Per-coordinate relative error, with the denominator floored at 1% of the
/// largest finite-difference component so near-zero entries compare on an
/// absolute scale.
pub fn max_relative_error(analytic: &[DVec3], numeric: &[DVec3], vertices: &[usize]) -> f64 {
    let scale = vertices
        .iter()
        .map(|&v| numeric[v].abs().max_element())
        .fold(0.0, f64::max);
    let floor = 1e-2 * scale;
    let mut worst = 0.0f64;
    for &v in vertices {
        for k in 0..3 {
            let (a, f) = (analytic[v][k], numeric[v][k]);
            worst = worst.max((a - f).abs() / f.abs().max(floor).max(1e-300));
        }
    }
    worst
}

pub fn central_difference(mesh: &TriangleMesh, vertices: &[usize], f: impl Fn(&TriangleMesh) -> f64) -> Vec<DVec3> {
    let mut out = vec![DVec3::ZERO; mesh.vertex_count()];
    for &v in vertices {
        for k in 0..3 {
            let mut plus = mesh.clone();
            plus.vertices[v][k] += H;
            let mut minus = mesh.clone();
            minus.vertices[v][k] -= H;
            out[v][k] = (f(&plus) - f(&minus)) / (2.0 * H);
        }
    }
    out
}

/// Worst relative error of the normal plus Laplacian gradient on one random
/// mesh seen from two random views, with pixel coverage held fixed.
pub fn normal_and_laplacian_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mesh = random_mesh(&mut rng);
    let views = random_views(&mut rng, 2);
    let sup = random_targets(&mut rng, &views);
    let weights = LossWeights {
        lambda_mask: 0.0,
        lambda_lap: 0.5,
    };
    let adj = mesh.adjacency();
    let analytic = evaluate(&mesh, &adj, &sup, weights).unwrap().gradient;
    let frozen = freeze(&mesh, &sup);
    let all: Vec<usize> = (0..mesh.vertex_count()).collect();
    let numeric = central_difference(&mesh, &all, |m| {
        frozen_normal_loss(m, &frozen, &sup) + 0.5 * laplacian_loss(m, &adj).0
    });
    max_relative_error(&analytic, &numeric, &all)
}

/// Worst relative error of the mask gradient at silhouette vertices, against
/// differences of fully re-rendered masks.
pub fn mask_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mesh = random_mesh(&mut rng);
    let views = random_views(&mut rng, 1);
    let sup = random_targets(&mut rng, &views);
    let maps = rasterize(&mesh, &views[0]);
    let (_, d_mask) = mask_loss(std::slice::from_ref(&maps), &sup).unwrap();
    let zeros = vec![DVec3::ZERO; maps.pixel_count()];
    let analytic = backward_parts(&mesh, &views[0], &maps, &zeros, &d_mask[0]).unwrap().mask;
    let boundary: Vec<usize> = (0..mesh.vertex_count()).filter(|&v| analytic[v] != DVec3::ZERO).collect();
    assert!(!boundary.is_empty());
    let numeric = central_difference(&mesh, &boundary, |m| mask_loss(&[rasterize(m, &views[0])], &sup).unwrap().0);
    max_relative_error(&analytic, &numeric, &boundary)
}
