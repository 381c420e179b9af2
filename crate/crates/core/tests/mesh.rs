#[path = "support/remeshing.rs"]
mod remeshing;

use glam::DVec3;
use meshloop::mesh::{compute_vertex_normals, load_mesh, normalize_to_unit, primitives, save_mesh, validate_manifold};
use meshloop::TriangleMesh;
use proptest::prelude::*;

#[test]
fn corpus_meshes_round_trip_through_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = remeshing::corpus();
    let blob = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets/corpus/blob.ply");
    corpus.push(("blob.ply".into(), load_mesh(blob).unwrap()));
    for (name, mesh) in corpus {
        assert!(validate_manifold(&mesh).is_closed_manifold(), "{name}");
        for ext in ["obj", "ply"] {
            let path = dir.path().join(format!("{name}.{ext}"));
            save_mesh(&mesh, &path).unwrap();
            let back = load_mesh(&path).unwrap();
            assert_eq!(back.faces, mesh.faces, "{name} via {ext}");
            for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
                assert!((*a - *b).abs().max_element() <= 1e-6, "{name} via {ext}");
            }
            assert_eq!(back.vertex_count(), mesh.vertex_count());
            assert_eq!(back.vertex_colors.is_some(), mesh.vertex_colors.is_some());
        }
    }
}

#[test]
fn sphere_with_a_thousand_faces_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let sphere = primitives::icosphere(3);
    assert_eq!(sphere.face_count(), 1280);
    let path = dir.path().join("s.obj");
    save_mesh(&sphere, &path).unwrap();
    let back = load_mesh(&path).unwrap();
    assert_eq!(back.faces, sphere.faces);
    assert!(back.vertices.iter().zip(&sphere.vertices).all(|(a, b)| a.distance(*b) <= 1e-6));
}

fn deformed(base: &TriangleMesh, scale: [f64; 3], offset: [f64; 3], wobble: f64) -> TriangleMesh {
    let mut m = base.clone();
    for v in &mut m.vertices {
        let w = 1.0 + wobble * (3.0 * v.x).sin() * (2.0 * v.y).cos();
        *v = *v * w * DVec3::from_array(scale) + DVec3::from_array(offset);
    }
    m
}

fn any_closed() -> impl Strategy<Value = TriangleMesh> {
    prop_oneof![
        (0u32..4).prop_map(primitives::icosphere),
        Just(primitives::cube()),
        (1u32..4).prop_map(|l| primitives::capsule(0.2, 0.6, l)),
        (1u32..3).prop_map(|l| primitives::bumpy_sphere(l, 0.2, 3.0)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn vertex_normals_are_unit(
        base in any_closed(),
        scale in prop::array::uniform3(0.01..100.0f64),
        offset in prop::array::uniform3(-50.0..50.0f64),
        wobble in 0.0..0.3f64,
    ) {
        let m = deformed(&base, scale, offset, wobble);
        for n in compute_vertex_normals(&m) {
            prop_assert!((n.length() - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn normalization_is_idempotent_and_keeps_euler(
        base in any_closed(),
        scale in prop::array::uniform3(0.01..100.0f64),
        offset in prop::array::uniform3(-50.0..50.0f64),
        wobble in 0.0..0.3f64,
    ) {
        let m = deformed(&base, scale, offset, wobble);
        let once = normalize_to_unit(&m).unwrap().mesh;
        let twice = normalize_to_unit(&once).unwrap().mesh;
        for (a, b) in once.vertices.iter().zip(&twice.vertices) {
            prop_assert!((*a - *b).abs().max_element() <= 1e-9);
        }
        let (lo, hi) = once.bounding_box().unwrap();
        prop_assert!(((hi - lo).max_element() - 1.0).abs() <= 1e-9);
        prop_assert!((lo + hi).abs().max_element() <= 1e-9);
        prop_assert_eq!(validate_manifold(&m).euler_characteristic, 2);
        prop_assert_eq!(validate_manifold(&once).euler_characteristic, 2);
    }
}
