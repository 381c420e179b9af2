use std::path::{Path, PathBuf};

use meshloop::metrics::MetricParams;
use meshloop::oracle::{CoarseMode, NoiseSpec};
use meshloop::refine::RefinementConfig;
use meshloop::render::{standard_views, CameraView, DEFAULT_FOV_DEG, DEFAULT_RADIUS, DEFAULT_RESOLUTION};
use meshloop::scene::DEFAULT_CLEARANCE;
use meshloop::texture::TextureParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Everything a run needs. Relative paths are resolved against the directory
/// of the config file; the top-level `seed` is copied into every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub views: ViewSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub coarse: CoarseSpec,
    #[serde(default)]
    pub refine: RefinementConfig,
    #[serde(default)]
    pub texture: TextureSpec,
    #[serde(default)]
    pub metrics: MetricParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Ground-truth mesh; normalized to the unit box on load.
    pub reference: PathBuf,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Starting mesh for refinement instead of a coarse initializer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<PathBuf>,
    /// Externally produced supervision directory used instead of oracle
    /// renders for refinement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supervision: Option<PathBuf>,
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViewSpec {
    pub count: usize,
    pub resolution: usize,
    pub radius: f64,
    pub fov_deg: f64,
}

impl Default for ViewSpec {
    fn default() -> Self {
        Self {
            count: 6,
            resolution: DEFAULT_RESOLUTION,
            radius: DEFAULT_RADIUS,
            fov_deg: DEFAULT_FOV_DEG,
        }
    }
}

impl ViewSpec {
    pub fn views(&self, scale: usize) -> meshloop::Result<Vec<CameraView>> {
        standard_views(self.count, self.radius, self.fov_deg, self.resolution * scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoarseSpec {
    pub mode: CoarseMode,
}

impl Default for CoarseSpec {
    fn default() -> Self {
        Self { mode: CoarseMode::Sphere }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextureSpec {
    /// Texture supervision is rendered at this multiple of the view
    /// resolution.
    pub supervision_scale: usize,
    pub depth_epsilon: f64,
    pub seam_iterations: usize,
}

impl Default for TextureSpec {
    fn default() -> Self {
        let p = TextureParams::default();
        Self {
            supervision_scale: 2,
            depth_epsilon: p.depth_epsilon,
            seam_iterations: p.seam_iterations,
        }
    }
}

impl TextureSpec {
    pub fn params(&self) -> TextureParams {
        TextureParams {
            depth_epsilon: self.depth_epsilon,
            seam_iterations: self.seam_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    /// JSON file with `surface`, `tracks` and `region`.
    pub layout: PathBuf,
    /// Mesh to insert; the textured mesh of the run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset: Option<PathBuf>,
    #[serde(default = "default_asset_id")]
    pub asset_id: String,
    #[serde(default = "default_poses")]
    pub n_poses: usize,
    #[serde(default = "default_clearance")]
    pub clearance: f64,
    #[serde(default = "default_obstacle_height")]
    pub obstacle_height: f64,
    /// Composited frames start at timestep 0; all track timesteps when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<usize>,
    /// Camera for the composited frames; looks at the region center from
    /// above when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraView>,
}

fn default_asset_id() -> String {
    "asset".into()
}

fn default_poses() -> usize {
    4
}

fn default_clearance() -> f64 {
    DEFAULT_CLEARANCE
}

fn default_obstacle_height() -> f64 {
    1.5
}

impl PipelineConfig {
    /// Parses TOML, applies overrides, resolves paths and validates.
    pub fn load(path: &Path, seed: Option<u64>, output: Option<&Path>) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CliError::Missing(path.to_path_buf()),
            _ => CliError::Data(format!("{}: {e}", path.display())),
        })?;
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve(base, seed, output);
        config.validate()?;
        Ok(config)
    }

    fn resolve(&mut self, base: &Path, seed: Option<u64>, output: Option<&Path>) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.paths.reference);
        match output {
            Some(o) => self.paths.output = o.to_path_buf(),
            None => join(&mut self.paths.output),
        }
        self.paths.initial.iter_mut().for_each(join);
        self.paths.supervision.iter_mut().for_each(join);
        if let Some(s) = &mut self.scene {
            join(&mut s.layout);
            s.asset.iter_mut().for_each(join);
        }
        if let Some(seed) = seed {
            self.seed = seed;
        }
        self.refine.seed = self.seed;
        self.noise.seed = self.seed;
        self.metrics.seed = self.seed;
    }

    pub fn validate(&self) -> CliResult<()> {
        let config = |e: meshloop::Error| CliError::Config(e.to_string());
        self.refine.validate().map_err(config)?;
        self.noise.validate().map_err(config)?;
        self.texture.params().validate().map_err(config)?;
        self.views.views(1).map_err(config)?;
        if self.texture.supervision_scale == 0 {
            return Err(CliError::Config("texture.supervision_scale must be at least 1".into()));
        }
        if !(self.metrics.samples > 0 && self.metrics.tau > 0.0 && self.metrics.iou_resolution > 0) {
            return Err(CliError::Config(
                "metrics.samples, metrics.tau and metrics.iou_resolution must be positive".into(),
            ));
        }
        if let Some(s) = &self.scene {
            if !(s.clearance >= 0.0 && s.clearance.is_finite() && s.obstacle_height > 0.0) {
                return Err(CliError::Config(
                    "scene.clearance must be non-negative and scene.obstacle_height positive".into(),
                ));
            }
            if let Some(c) = &s.camera {
                c.validate().map_err(config)?;
            }
        }
        let mut files = vec![&self.paths.reference];
        files.extend(&self.paths.initial);
        files.extend(&self.paths.supervision);
        if let Some(s) = &self.scene {
            files.push(&s.layout);
            files.extend(&s.asset);
        }
        for f in files {
            if !f.exists() {
                return Err(CliError::Missing(f.clone()));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// SHA-256 of the resolved config, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
