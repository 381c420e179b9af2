use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn meshloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meshloop"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn run_dir(out: &Output) -> PathBuf {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    PathBuf::from(String::from_utf8(out.stdout.clone()).unwrap().trim())
}

/// Small, fast config around a corpus mesh.
fn config(dir: &Path, mesh: &str, extra: &str) -> PathBuf {
    let reference = workspace().join("assets/corpus").join(mesh);
    let text = format!(
        "[paths]\nreference = {:?}\noutput = \"runs\"\n[views]\nresolution = 96\n[refine]\niterations = 5\ninner_steps = 5\n{extra}",
        reference.display().to_string()
    );
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_reference_exits_3_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[paths]\nreference = \"no_such_mesh.obj\"\n").unwrap();
    let out = meshloop(&["refine", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_mesh.obj"));
}

#[test]
fn malformed_config_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "cube.obj", "[noise]\nnormal_sigma_deg = \"lots\"\n");
    let out = meshloop(&["supervise", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("normal_sigma_deg") && err.contains("line 10"), "{err}");
}

#[test]
fn eval_of_the_reference_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "icosphere.obj", "");
    let mesh = workspace().join("assets/corpus/icosphere.obj");
    let out = meshloop(&["eval", "--config", cfg.to_str().unwrap(), "--mesh", mesh.to_str().unwrap()]);
    let report = json(run_dir(&out).join("report.json"));
    let g = &report["geometry"];
    // two independent 16384-point samplings of the same unit sphere
    assert!(g["chamfer"].as_f64().unwrap() < 0.01);
    assert_eq!(g["volume_iou"].as_f64().unwrap(), 1.0);
    assert!(report["image"].is_null());
}

#[test]
fn pipeline_on_the_cube_improves_chamfer_and_records_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "cube.obj", "");
    let run = run_dir(&meshloop(&["pipeline", "--config", cfg.to_str().unwrap(), "--seed", "3"]));
    assert!(run.starts_with(dir.path().join("runs")));
    for f in ["config.toml", "run.json", "initial.obj", "refined.obj", "trace.csv", "report.json", "supervision/manifest.toml"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let report = json(run.join("report.json"));
    assert!(report["chamfer"].as_f64().unwrap() < report["initial_chamfer"].as_f64().unwrap());
    assert!(report["texture"].is_null());
    let info = json(run.join("run.json"));
    assert_eq!(info["seed"], 3);
    assert_eq!(info["command"], "pipeline");
    let resolved = std::fs::read_to_string(run.join("config.toml")).unwrap();
    assert!(resolved.contains("seed = 3"));
    assert_eq!(std::fs::read_to_string(run.join("trace.csv")).unwrap().lines().count(), 6);
}

#[test]
fn ablation_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "capsule.obj", "");
    let c = cfg.to_str().unwrap();
    let a = run_dir(&meshloop(&["ablate", "--config", c, "--max-iter", "4", "--threads", "1"]));
    let b = run_dir(&meshloop(&["ablate", "--config", c, "--max-iter", "4", "--threads", "3"]));
    assert_ne!(a, b);
    let csv = std::fs::read_to_string(a.join("ablation.csv")).unwrap();
    assert_eq!(csv, std::fs::read_to_string(b.join("ablation.csv")).unwrap());
    assert_eq!(std::fs::read(a.join("run.json")).unwrap(), std::fs::read(b.join("run.json")).unwrap());
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "iteration,chamfer,f_score");
    assert_eq!(rows.len(), 6);
    assert!(rows[5].starts_with("4,"));
}

#[test]
fn texture_and_place_on_the_colored_blob() {
    let dir = tempfile::tempdir().unwrap();
    let scene = workspace().join("assets/scenes/street.json");
    let extra = format!("[scene]\nlayout = {:?}\nn_poses = 3\nframes = 2\n", scene.display().to_string());
    let cfg = config(dir.path(), "blob.ply", &extra);
    let c = cfg.to_str().unwrap();
    let mesh = workspace().join("assets/corpus/blob.ply");
    let run = run_dir(&meshloop(&["texture", "--config", c, "--mesh", mesh.to_str().unwrap()]));
    let report = json(run.join("texture_report.json"));
    let fused = report["fused"]["psnr"].as_f64().unwrap();
    let baseline = report["baseline"]["psnr"].as_f64().unwrap();
    assert!(fused > baseline + 2.0, "fused {fused} baseline {baseline}");
    assert!(run.join("textured.ply").exists());

    let run = run_dir(&meshloop(&["place", "--config", c]));
    let manifest = json(run.join("placements.json"));
    assert_eq!(manifest["placements"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["saturated"], false);
    for t in 0..2 {
        assert!(run.join(format!("frames/frame_{t:03}.png")).exists());
        assert!(run.join(format!("frames/depth_{t:03}.pfm")).exists());
    }
    assert!(!run.join("frames/frame_002.png").exists());
}

#[test]
fn place_without_scene_section_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "cube.obj", "");
    let out = meshloop(&["place", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
