use std::path::Path;

use glam::{DVec2, DVec3};
use meshloop::imageio::{write_color_png, write_scalar_pfm};
use meshloop::mesh::{load_mesh, normalize_to_unit, save_mesh, save_ply_with_view_ids, TriangleMesh};
use meshloop::metrics::{chamfer_distance, f_score, geometry_report, GeometryReport, ImageReport, DEFAULT_SAMPLES, DEFAULT_TAU};
use meshloop::oracle::{export_supervision, import_supervision, make_coarse_initial, render_supervision, SupervisionSet};
use meshloop::refine::{refine, trace_csv, RefineOutput, RefinementConfig};
use meshloop::render::{rasterize, CameraView};
use meshloop::scene::{
    composite, find_collision_free, footprint_box, ground_mesh, snap_to_ground, GroundSurface, ObstacleTrack, Placement, Rect2,
    Region,
};
use meshloop::texture::{average_view_colors, rerender_report, texture_pipeline};
use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, SceneSpec};
use crate::error::{CliError, CliResult};
use crate::run::RunDir;

const GROUND_COLOR: DVec3 = DVec3::new(0.35, 0.35, 0.33);
const SKY_COLOR: DVec3 = DVec3::new(0.55, 0.7, 0.85);
const ASSET_FALLBACK_COLOR: DVec3 = DVec3::new(0.85, 0.45, 0.15);
const GROUND_CELLS: usize = 32;

/// Scene input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneLayout {
    pub surface: GroundSurface,
    #[serde(default)]
    pub tracks: Vec<ObstacleTrack>,
    pub region: Region,
}

impl SceneLayout {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let layout: SceneLayout =
            serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        layout.surface.validate()?;
        layout.region.validate()?;
        for t in &layout.tracks {
            t.validate()?;
        }
        Ok(layout)
    }

    pub fn timesteps(&self) -> usize {
        self.tracks
            .iter()
            .filter(|t| !t.footprints.is_empty())
            .map(|t| t.end() + 1)
            .max()
            .unwrap_or(1)
    }
}

pub fn load_reference(config: &PipelineConfig) -> CliResult<TriangleMesh> {
    Ok(normalize_to_unit(&load_mesh(&config.paths.reference)?)?.mesh)
}

/// Supervision at `scale` times the view resolution. An external set, when
/// configured, replaces the oracle at every scale.
pub fn supervision(config: &PipelineConfig, reference: &TriangleMesh, scale: usize) -> CliResult<SupervisionSet> {
    if let Some(dir) = &config.paths.supervision {
        return Ok(import_supervision(dir)?);
    }
    let views = config.views.views(scale)?;
    Ok(render_supervision(reference, &views, &config.noise)?)
}

pub fn initial_mesh(config: &PipelineConfig, reference: &TriangleMesh) -> CliResult<TriangleMesh> {
    match &config.paths.initial {
        Some(p) => Ok(load_mesh(p)?),
        None => Ok(make_coarse_initial(reference, config.coarse.mode, config.seed)?),
    }
}

pub fn cmd_supervise(config: &PipelineConfig, run: &RunDir) -> CliResult<()> {
    let reference = load_reference(config)?;
    export_supervision(&supervision(config, &reference, 1)?, run.subdir("supervision")?)?;
    if config.paths.supervision.is_none() {
        let scale = config.texture.supervision_scale;
        export_supervision(&supervision(config, &reference, scale)?, run.subdir("supervision_texture")?)?;
    }
    Ok(())
}

fn refine_stage(
    config: &PipelineConfig,
    reference: &TriangleMesh,
    sup: &SupervisionSet,
    refine_config: &RefinementConfig,
    run: &RunDir,
) -> CliResult<(TriangleMesh, RefineOutput)> {
    let initial = initial_mesh(config, reference)?;
    save_mesh(&initial, run.file("initial.obj"))?;
    let out = refine(&initial, sup, refine_config, Some(reference))?;
    save_mesh(&out.mesh, run.file("refined.obj"))?;
    run.write_text("trace.csv", &trace_csv(&out.trace))?;
    Ok((initial, out))
}

pub fn cmd_refine(config: &PipelineConfig, run: &RunDir) -> CliResult<()> {
    let reference = load_reference(config)?;
    let sup = supervision(config, &reference, 1)?;
    refine_stage(config, &reference, &sup, &config.refine, run)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct TextureReport {
    pub fused: ImageReport,
    pub baseline: ImageReport,
    pub visible_vertices: usize,
    pub vertices: usize,
}

fn texture_stage(config: &PipelineConfig, reference: &TriangleMesh, mesh: &TriangleMesh, run: &RunDir) -> CliResult<(TriangleMesh, TextureReport)> {
    let sup = supervision(config, reference, config.texture.supervision_scale)?;
    if !sup.has_color() {
        return Err(CliError::Data(
            "texture supervision has no color images; the reference mesh needs vertex colors".into(),
        ));
    }
    let params = config.texture.params();
    let fused = texture_pipeline(mesh, &sup, &params)?;
    let baseline = average_view_colors(mesh, &sup)?;
    save_ply_with_view_ids(&fused.mesh, &fused.assignment.view, run.file("textured.ply"))?;
    save_mesh(&baseline, run.file("texture_baseline.ply"))?;
    let report = TextureReport {
        fused: rerender_report(&fused.mesh, &sup)?,
        baseline: rerender_report(&baseline, &sup)?,
        visible_vertices: fused.assignment.visible_count(),
        vertices: mesh.vertex_count(),
    };
    run.write_json("texture_report.json", &report)?;
    Ok((fused.mesh, report))
}

pub fn cmd_texture(config: &PipelineConfig, mesh_path: &Path, run: &RunDir) -> CliResult<()> {
    let reference = load_reference(config)?;
    let mesh = load_mesh(mesh_path)?;
    texture_stage(config, &reference, &mesh, run)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub geometry: GeometryReport,
    /// Present when the evaluated mesh carries vertex colors and the
    /// reference produces color supervision.
    pub image: Option<ImageReport>,
}

pub fn cmd_eval(config: &PipelineConfig, mesh_path: &Path, run: &RunDir) -> CliResult<()> {
    let reference = load_reference(config)?;
    let mesh = load_mesh(mesh_path)?;
    let geometry = geometry_report(&mesh, &reference, &config.metrics)?;
    let image = if mesh.vertex_colors.is_some() {
        let sup = supervision(config, &reference, config.texture.supervision_scale)?;
        if sup.has_color() {
            Some(rerender_report(&mesh, &sup)?)
        } else {
            None
        }
    } else {
        None
    };
    run.write_json("report.json", &EvalReport { geometry, image })
}

#[derive(Debug, Serialize)]
pub struct PlacementManifest {
    pub asset_id: String,
    pub placements: Vec<Placement>,
    pub requested: usize,
    pub saturated: bool,
    pub attempts: usize,
}

fn default_camera(layout: &SceneLayout) -> CliResult<CameraView> {
    let (lo, hi) = (DVec2::from_array(layout.region.min), DVec2::from_array(layout.region.max));
    let center = 0.5 * (lo + hi);
    let (h, _) = layout.surface.sample(center)?;
    Ok(CameraView {
        azimuth_deg: -60.0,
        elevation_deg: 35.0,
        radius: 1.2 * (hi - lo).length().max(2.0),
        fov_deg: 50.0,
        width: 320,
        height: 240,
        look_at: [center.x, center.y, h],
    })
}

fn merge(meshes: &[TriangleMesh]) -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut colors = Vec::new();
    for m in meshes {
        let base = vertices.len() as u32;
        vertices.extend_from_slice(&m.vertices);
        faces.extend(m.faces.iter().map(|f| f.map(|i| i + base)));
        match &m.vertex_colors {
            Some(c) => colors.extend_from_slice(c),
            None => colors.extend(std::iter::repeat_n(ASSET_FALLBACK_COLOR, m.vertex_count())),
        }
    }
    TriangleMesh::new(vertices, faces).with_colors(colors)
}

fn painted(mesh: TriangleMesh, color: DVec3) -> TriangleMesh {
    let n = mesh.vertex_count();
    mesh.with_colors(vec![color; n])
}

fn track_color(k: usize) -> DVec3 {
    const PALETTE: [DVec3; 4] = [
        DVec3::new(0.2, 0.3, 0.8),
        DVec3::new(0.8, 0.2, 0.2),
        DVec3::new(0.2, 0.7, 0.3),
        DVec3::new(0.7, 0.7, 0.2),
    ];
    PALETTE[k % PALETTE.len()]
}

/// Samples poses, snaps the asset at each, and composites one frame per
/// timestep over a render of the ground and the obstacles present then.
fn place_stage(config: &PipelineConfig, spec: &SceneSpec, asset: &TriangleMesh, run: &RunDir) -> CliResult<PlacementManifest> {
    let layout = SceneLayout::load(&spec.layout)?;
    let (lo, hi) = asset
        .bounding_box()
        .ok_or_else(|| CliError::Data("asset mesh has no vertices".into()))?;
    let local = Rect2 {
        center: [0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)],
        yaw: 0.0,
        half_extents: [(0.5 * (hi.x - lo.x)).max(1e-9), (0.5 * (hi.y - lo.y)).max(1e-9)],
    };
    let sampling = find_collision_free(
        &layout.surface,
        &layout.tracks,
        &local,
        &layout.region,
        spec.n_poses,
        spec.clearance,
        config.seed,
    )?;
    if sampling.saturated {
        log::warn!(
            "placement saturated after {} attempts: {} of {} poses",
            sampling.attempts,
            sampling.poses.len(),
            spec.n_poses
        );
    }
    let timesteps = layout.timesteps();
    let placements = sampling
        .poses
        .iter()
        .map(|p| {
            snap_to_ground(
                asset,
                &spec.asset_id,
                DVec2::from_array(p.xy),
                p.yaw,
                &layout.surface,
                [0, timesteps - 1],
            )
        })
        .collect::<meshloop::Result<Vec<_>>>()?;
    let manifest = PlacementManifest {
        asset_id: spec.asset_id.clone(),
        placements,
        requested: spec.n_poses,
        saturated: sampling.saturated,
        attempts: sampling.attempts,
    };
    run.write_json("placements.json", &manifest)?;

    let camera = match &spec.camera {
        Some(c) => c.clone(),
        None => default_camera(&layout)?,
    };
    let ground = painted(ground_mesh(&layout.surface, &layout.region, GROUND_CELLS)?, GROUND_COLOR);
    let colored_asset = if asset.vertex_colors.is_some() {
        asset.clone()
    } else {
        painted(asset.clone(), ASSET_FALLBACK_COLOR)
    };
    let posed: Vec<TriangleMesh> = manifest.placements.iter().map(|p| p.apply(&colored_asset)).collect();
    let asset_maps = rasterize(&merge(&posed), &camera);
    let frames = run.subdir("frames")?;
    for t in 0..spec.frames.unwrap_or(timesteps).max(1) {
        let mut parts = vec![ground.clone()];
        for (k, track) in layout.tracks.iter().enumerate() {
            if let Some(rect) = t.checked_sub(track.start).and_then(|i| track.footprints.get(i)) {
                parts.push(painted(footprint_box(rect, &layout.surface, spec.obstacle_height)?, track_color(k)));
            }
        }
        let bg = rasterize(&merge(&parts), &camera);
        let bg_color: Vec<DVec3> = bg
            .color
            .as_ref()
            .expect("merged meshes carry colors")
            .iter()
            .zip(&bg.mask)
            .map(|(c, m)| if *m > 0.0 { *c } else { SKY_COLOR })
            .collect();
        let frame = composite(&bg_color, &bg.depth, &asset_maps)?;
        let depth: Vec<f64> = bg
            .depth
            .iter()
            .zip(asset_maps.depth.iter().zip(&asset_maps.mask))
            .map(|(b, (a, m))| if *m > 0.0 { b.min(*a) } else { *b })
            .collect();
        write_color_png(frames.join(format!("frame_{t:03}.png")), camera.width, camera.height, &frame)?;
        write_scalar_pfm(frames.join(format!("depth_{t:03}.pfm")), camera.width, camera.height, &depth)?;
    }
    Ok(manifest)
}

pub fn cmd_place(config: &PipelineConfig, run: &RunDir) -> CliResult<()> {
    let spec = config
        .scene
        .as_ref()
        .ok_or_else(|| CliError::Config("the place command needs a [scene] section".into()))?;
    let asset = match &spec.asset {
        Some(p) => load_mesh(p)?,
        None => load_reference(config)?,
    };
    place_stage(config, spec, &asset, run)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct PipelineReport {
    pub initial_chamfer: f64,
    pub chamfer: f64,
    pub initial: GeometryReport,
    pub refined: GeometryReport,
    pub texture: Option<TextureReport>,
    pub placements: Option<usize>,
}

pub fn cmd_pipeline(config: &PipelineConfig, run: &RunDir) -> CliResult<()> {
    let reference = load_reference(config)?;
    let sup = supervision(config, &reference, 1)?;
    export_supervision(&sup, run.subdir("supervision")?)?;
    let (initial, out) = refine_stage(config, &reference, &sup, &config.refine, run)?;
    let initial_report = geometry_report(&initial, &reference, &config.metrics)?;
    let refined_report = geometry_report(&out.mesh, &reference, &config.metrics)?;
    let (asset, texture) = if sup.has_color() {
        let (textured, report) = texture_stage(config, &reference, &out.mesh, run)?;
        (textured, Some(report))
    } else {
        log::info!("reference has no colors; skipping texture fusion");
        (out.mesh.clone(), None)
    };
    let placements = match &config.scene {
        Some(spec) => {
            let asset = match &spec.asset {
                Some(p) => load_mesh(p)?,
                None => asset,
            };
            Some(place_stage(config, spec, &asset, run)?.placements.len())
        }
        None => None,
    };
    let report = PipelineReport {
        initial_chamfer: initial_report.chamfer,
        chamfer: refined_report.chamfer,
        initial: initial_report,
        refined: refined_report,
        texture,
        placements,
    };
    if !report.chamfer.is_finite() {
        return Err(CliError::Numeric("refined chamfer distance is not finite".into()));
    }
    run.write_json("report.json", &report)
}

/// Refines for `max_iter` iterations and records geometry metrics after each
/// one, with the starting mesh as iteration 0.
pub fn cmd_ablate(config: &PipelineConfig, max_iter: usize, run: &RunDir) -> CliResult<()> {
    if max_iter == 0 {
        return Err(CliError::Config("--max-iter must be at least 1".into()));
    }
    let reference = load_reference(config)?;
    let sup = supervision(config, &reference, 1)?;
    let refine_config = RefinementConfig {
        iterations: max_iter,
        ..config.refine.clone()
    };
    let (initial, out) = refine_stage(config, &reference, &sup, &refine_config, run)?;
    // same sampling as the per-iteration trace metrics
    let seed = refine_config.seed;
    let mut csv = String::from("iteration,chamfer,f_score\n");
    csv.push_str(&format!(
        "0,{},{}\n",
        chamfer_distance(&initial, &reference, DEFAULT_SAMPLES, seed)?,
        f_score(&initial, &reference, DEFAULT_TAU, DEFAULT_SAMPLES, seed)?
    ));
    for row in &out.trace {
        let (cd, fs) = (row.chamfer.unwrap_or(f64::NAN), row.f_score.unwrap_or(f64::NAN));
        csv.push_str(&format!("{},{cd},{fs}\n", row.iteration + 1));
    }
    run.write_text("ablation.csv", &csv)
}
