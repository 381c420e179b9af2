#[path = "support/scenes.rs"]
mod scenes;

use glam::{DVec2, DVec3};
use meshloop::mesh::primitives;
use meshloop::render::{rasterize, CameraView, ViewMaps};
use meshloop::scene::{composite, snap_to_ground, GroundSurface, Rect2};
use meshloop::TriangleMesh;
use proptest::prelude::*;

#[test]
fn oracle_agrees_with_sat_away_from_contact() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut rect = || Rect2 {
        center: [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)],
        yaw: rng.random_range(0.0..6.3),
        half_extents: [rng.random_range(0.1..1.5), rng.random_range(0.1..1.5)],
    };
    let (mut hits, mut misses) = (0, 0);
    for _ in 0..20_000 {
        let (a, b) = (rect(), rect());
        let oracle = scenes::rects_overlap(&a, &b);
        // a tiny shrink and grow bracket the contact case
        if scenes::rects_overlap(&a.inflated(1e-9), &b) != scenes::rects_overlap(&a.inflated(-1e-9), &b) {
            continue;
        }
        assert_eq!(a.intersects(&b), oracle, "{a:?} {b:?}");
        if oracle {
            hits += 1;
        } else {
            misses += 1;
        }
    }
    assert!(hits > 1000 && misses > 1000);
}

#[test]
fn random_scenes_have_no_collisions() {
    let mut placed = 0;
    for seed in 0..1000 {
        let scene = scenes::random_scene(seed);
        let result = scenes::sample(&scene, seed);
        assert_eq!(scenes::violations(&scene, &result), 0, "scene {seed}");
        assert!(result.poses.len() == scene.n_poses || result.saturated);
        placed += result.poses.len();
    }
    assert!(placed > 1000, "only {placed} poses placed");
}

fn lumpy_asset(scale: [f64; 3], bumps: &[f64]) -> TriangleMesh {
    let mut m = primitives::icosphere(1);
    for (i, v) in m.vertices.iter_mut().enumerate() {
        *v = DVec3::from_array(scale) * *v * bumps[i % bumps.len()];
    }
    m
}

fn gaps(mesh: &TriangleMesh, surface: &GroundSurface) -> Vec<f64> {
    mesh.vertices
        .iter()
        .map(|v| v.z - surface.sample(v.truncate()).unwrap().0)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn snapped_asset_rests_on_a_plane(
        scale in prop::array::uniform3(0.1..1.0f64),
        bumps in prop::collection::vec(0.7..1.3f64, 1..8),
        tilt in 0.0..0.6f64,
        heading in 0.0..6.3f64,
        yaw in 0.0..6.3f64,
        x in -3.0..3.0f64,
        y in -3.0..3.0f64,
        h in -1.0..1.0f64,
    ) {
        let asset = lumpy_asset(scale, &bumps);
        let n = DVec3::new(tilt.sin() * heading.cos(), tilt.sin() * heading.sin(), tilt.cos());
        let surface = GroundSurface::Plane { point: [0.0, 0.0, h], normal: n.to_array() };
        let p = snap_to_ground(&asset, "a", DVec2::new(x, y), yaw, &surface, [0, 0]).unwrap();
        prop_assert!((p.up() - n).length() < 1e-6);
        let g = gaps(&p.apply(&asset), &surface);
        let min = g.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(min.abs() < 1e-6, "lowest gap {}", min);
        prop_assert!(g.iter().all(|&d| d >= -1e-9));
    }

    #[test]
    fn snapped_asset_touches_a_ramp(
        scale in prop::array::uniform3(0.05..0.4f64),
        sx in -0.3..0.3f64,
        sy in -0.3..0.3f64,
        yaw in 0.0..6.3f64,
        x in -1.0..1.0f64,
        y in -1.0..1.0f64,
    ) {
        let (rows, cols) = (7, 7);
        let heights = (0..rows * cols).map(|i| sx * (i % cols) as f64 + sy * (i / cols) as f64).collect();
        let surface = GroundSurface::Heightfield { origin: [-3.0, -3.0], cell: 1.0, rows, cols, heights };
        let asset = lumpy_asset(scale, &[1.0]);
        let p = snap_to_ground(&asset, "a", DVec2::new(x, y), yaw, &surface, [0, 0]).unwrap();
        let min = gaps(&p.apply(&asset), &surface).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min.abs() < 1e-6, "lowest gap {}", min);
    }

    #[test]
    fn compositing_nothing_keeps_the_background(
        pixels in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.01..100.0f64), 64),
    ) {
        let background: Vec<DVec3> = pixels.iter().map(|p| DVec3::new(p.0, p.1, p.2)).collect();
        let depth: Vec<f64> = pixels.iter().map(|p| p.3).collect();
        let empty = ViewMaps::empty(8, 8);
        prop_assert_eq!(composite(&background, &depth, &empty).unwrap(), background.clone());
        let view = CameraView::new(0.0, 0.0, 2.0, 40.0, 8);
        let rendered = rasterize(&TriangleMesh::default(), &view);
        prop_assert_eq!(composite(&background, &depth, &rendered).unwrap(), background);
    }
}
