//! Supervision directories: `manifest.toml` plus per-view PFM normals, PNG
//! masks and optional PNG color images.

use std::fs;
use std::path::Path;

use glam::DVec3;
use serde::{Deserialize, Serialize};

use super::{SupervisionSet, SupervisionSource, SupervisionView};
use crate::error::{Error, Result};
use crate::imageio;
use crate::render::CameraView;

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    source: SupervisionSource,
    width: usize,
    height: usize,
    #[serde(rename = "view")]
    views: Vec<ManifestView>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestView {
    #[serde(flatten)]
    camera: CameraView,
    normal: String,
    mask: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    color: Option<String>,
}

pub fn export_supervision(set: &SupervisionSet, dir: impl AsRef<Path>) -> Result<()> {
    set.validate()?;
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (width, height) = set.resolution();
    let mut views = Vec::new();
    for (k, (view, t)) in set.views.iter().zip(&set.targets).enumerate() {
        let normal = format!("view_{k:02}_normal.pfm");
        let mask = format!("view_{k:02}_mask.png");
        imageio::write_vec3_pfm(dir.join(&normal), width, height, &t.normal)?;
        imageio::write_mask_png(dir.join(&mask), width, height, &t.mask)?;
        let color = match &t.color {
            Some(c) => {
                let name = format!("view_{k:02}_color.png");
                imageio::write_color_png(dir.join(&name), width, height, c)?;
                Some(name)
            }
            None => None,
        };
        views.push(ManifestView {
            camera: view.clone(),
            normal,
            mask,
            color,
        });
    }
    let manifest = Manifest {
        source: set.source,
        width,
        height,
        views,
    };
    let text = toml::to_string_pretty(&manifest).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let path = dir.join(MANIFEST);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Reads a supervision directory. Normals are renormalized and zeroed where
/// the mask is empty, so externally produced maps satisfy the same
/// invariants as oracle renders.
pub fn import_supervision(dir: impl AsRef<Path>) -> Result<SupervisionSet> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        location: e.span().map_or("unknown".into(), |s| format!("byte {}", s.start)),
        message: e.message().to_string(),
    })?;
    let (w, h) = (manifest.width, manifest.height);
    let check = |file: &str, dims: (usize, usize)| {
        if dims == (w, h) {
            Ok(())
        } else {
            Err(Error::Mismatch(format!(
                "{file} is {}x{}, manifest says {w}x{h}",
                dims.0, dims.1
            )))
        }
    };
    let mut views = Vec::new();
    let mut targets = Vec::new();
    for mv in manifest.views {
        let (nw, nh, mut normal) = imageio::read_vec3_pfm(dir.join(&mv.normal))?;
        check(&mv.normal, (nw, nh))?;
        let (mw, mh, mask) = imageio::read_mask_png(dir.join(&mv.mask))?;
        check(&mv.mask, (mw, mh))?;
        for (n, m) in normal.iter_mut().zip(&mask) {
            if !n.is_finite() {
                return Err(Error::Numeric(format!("non-finite normal in {}", mv.normal)));
            }
            *n = if *m > 0.0 { n.try_normalize().unwrap_or(DVec3::ZERO) } else { DVec3::ZERO };
        }
        let color = match &mv.color {
            Some(name) => {
                let (cw, ch, c) = imageio::read_color_png(dir.join(name))?;
                check(name, (cw, ch))?;
                Some(c)
            }
            None => None,
        };
        if (mv.camera.width, mv.camera.height) != (w, h) {
            return Err(Error::Mismatch(format!("view resolution differs from manifest {w}x{h}")));
        }
        views.push(mv.camera);
        targets.push(SupervisionView {
            width: w,
            height: h,
            normal,
            mask,
            color,
        });
    }
    let set = SupervisionSet {
        views,
        targets,
        source: manifest.source,
    };
    set.validate()?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use crate::oracle::{render_supervision, NoiseSpec};
    use crate::render::standard_views;

    #[test]
    fn round_trip_within_quantization() {
        let mesh = primitives::cube().with_colors(vec![DVec3::new(0.8, 0.3, 0.1); 8]);
        let views = standard_views(4, 2.8, 40.0, 24).unwrap();
        let set = render_supervision(&mesh, &views, &NoiseSpec::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_supervision(&set, dir.path()).unwrap();
        let back = import_supervision(dir.path()).unwrap();
        assert_eq!(back.views, set.views);
        assert_eq!(back.source, SupervisionSource::Oracle);
        for (a, b) in set.targets.iter().zip(&back.targets) {
            for (m, n) in a.mask.iter().zip(&b.mask) {
                assert!((m - n).abs() <= 0.5 / 255.0 + 1e-12);
            }
            for (p, q) in a.normal.iter().zip(&b.normal) {
                if *p != DVec3::ZERO {
                    assert!(p.distance(*q) < 1e-6);
                }
            }
            assert!(b.color.is_some());
        }
    }

    #[test]
    fn missing_manifest_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let err = import_supervision(dir.path()).unwrap_err().to_string();
        assert!(err.contains(MANIFEST), "{err}");
    }
}
