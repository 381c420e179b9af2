//! Writes the bundled evaluation shapes to `assets/corpus`, normalized to
//! the unit box.
//!
//! cargo run --release --example gen_corpus -- [out_dir]

use glam::DVec3;
use meshloop::mesh::{normalize_to_unit, primitives, save_mesh, TriangleMesh};

fn rock() -> TriangleMesh {
    let mut m = primitives::icosphere(4);
    for v in &mut m.vertices {
        let lobes = 0.18 * (2.1 * v.x + 0.7).sin() * (1.7 * v.y - 0.3).cos()
            + 0.1 * (3.3 * v.z + 1.1 * v.x).sin()
            + 0.06 * (5.0 * v.y).cos() * (4.0 * v.z).sin();
        *v *= 1.0 + lobes;
        v.x *= 1.35;
        v.z *= 0.8;
    }
    m
}

/// Longitude stripes over latitude bands, in linear RGB.
fn paint(mesh: &TriangleMesh) -> Vec<DVec3> {
    mesh.vertices
        .iter()
        .map(|p| {
            let d = p.normalize_or_zero();
            let stripe = 0.5 + 0.5 * (6.0 * d.y.atan2(d.x)).sin();
            let band = 0.5 + 0.5 * (9.0 * d.z).cos();
            DVec3::new(0.85 * stripe + 0.05, 0.15 + 0.6 * band * (1.0 - stripe), 0.9 * (1.0 - band) + 0.05)
        })
        .collect()
}

fn main() -> meshloop::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "assets/corpus".into());
    std::fs::create_dir_all(&out).map_err(|e| meshloop::Error::Io {
        path: out.clone().into(),
        source: e,
    })?;
    let shapes = [
        ("cube.obj", primitives::cube()),
        ("icosphere.obj", primitives::icosphere(4)),
        ("torus.obj", primitives::torus(0.35, 0.15, 48, 24)),
        ("capsule.obj", primitives::capsule(0.3, 0.6, 4)),
        ("rock.obj", rock()),
    ];
    for (name, mesh) in shapes {
        let m = normalize_to_unit(&mesh)?.mesh;
        save_mesh(&m, format!("{out}/{name}"))?;
        println!("{name}: {} faces", m.face_count());
    }
    let blob = normalize_to_unit(&primitives::bumpy_sphere(4, 0.12, 3.0))?.mesh;
    let colors = paint(&blob);
    save_mesh(&blob.with_colors(colors), format!("{out}/blob.ply"))?;
    println!("blob.ply: colored");
    Ok(())
}
