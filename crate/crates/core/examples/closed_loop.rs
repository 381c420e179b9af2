//! Refines a sphere towards a reference mesh from oracle supervision and
//! prints the per-iteration trace.
//!
//! cargo run --release --example closed_loop -- assets/corpus/cube.obj [iterations]

use meshloop::mesh::{load_mesh, normalize_to_unit};
use meshloop::metrics::{chamfer_distance, DEFAULT_SAMPLES};
use meshloop::oracle::{make_coarse_initial, render_supervision, CoarseMode, NoiseSpec};
use meshloop::refine::{refine, trace_csv, RefinementConfig};
use meshloop::render::{standard_views, DEFAULT_FOV_DEG, DEFAULT_RADIUS, DEFAULT_RESOLUTION};

fn main() -> meshloop::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().collect();
    let path = args.get(1).map_or("assets/corpus/cube.obj", String::as_str);
    let iterations = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20);
    let reference = normalize_to_unit(&load_mesh(path)?)?.mesh;
    let views = standard_views(6, DEFAULT_RADIUS, DEFAULT_FOV_DEG, DEFAULT_RESOLUTION)?;
    let sup = render_supervision(&reference, &views, &NoiseSpec::default())?;
    let initial = make_coarse_initial(&reference, CoarseMode::Sphere, 0)?;
    let start = std::time::Instant::now();
    let cd0 = chamfer_distance(&initial, &reference, DEFAULT_SAMPLES, 0)?;
    let config = RefinementConfig {
        iterations,
        ..Default::default()
    };
    let out = refine(&initial, &sup, &config, Some(&reference))?;
    print!("{}", trace_csv(&out.trace));
    let cd = out.trace.last().and_then(|r| r.chamfer).unwrap_or(f64::NAN);
    println!("initial chamfer {cd0:.5} final {cd:.5} ratio {:.3} in {:.1?}", cd / cd0, start.elapsed());
    Ok(())
}
