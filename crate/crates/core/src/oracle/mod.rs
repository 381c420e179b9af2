//! Synthetic supervision: multi-view normal, silhouette and color targets
//! rendered from a reference mesh, optional corruption, and coarse initial
//! meshes.

mod coarse;
mod io;

use glam::DVec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::render::{rasterize_views, CameraView, ViewMaps};

pub use coarse::{decimate, make_coarse_initial, marching_tetrahedra, CoarseMode};
pub use io::{export_supervision, import_supervision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupervisionSource {
    Oracle,
    External,
}

/// Targets for one view.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisionView {
    pub width: usize,
    pub height: usize,
    /// World-space unit normals where covered, zero elsewhere.
    pub normal: Vec<DVec3>,
    pub mask: Vec<f64>,
    /// Linear RGB.
    pub color: Option<Vec<DVec3>>,
}

impl SupervisionView {
    pub fn from_maps(maps: &ViewMaps) -> Self {
        Self {
            width: maps.width,
            height: maps.height,
            normal: maps.normal.clone(),
            mask: maps.mask.clone(),
            color: maps.color.clone(),
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisionSet {
    pub views: Vec<CameraView>,
    pub targets: Vec<SupervisionView>,
    pub source: SupervisionSource,
}

impl SupervisionSet {
    pub fn resolution(&self) -> (usize, usize) {
        self.views.first().map_or((0, 0), |v| (v.width, v.height))
    }

    pub fn has_color(&self) -> bool {
        !self.targets.is_empty() && self.targets.iter().all(|t| t.color.is_some())
    }

    pub fn validate(&self) -> Result<()> {
        if self.views.is_empty() {
            return Err(Error::InvalidArgument("supervision has no views".into()));
        }
        if self.views.len() != self.targets.len() {
            return Err(Error::Mismatch(format!(
                "{} views but {} target maps",
                self.views.len(),
                self.targets.len()
            )));
        }
        let (w, h) = self.resolution();
        for (k, (v, t)) in self.views.iter().zip(&self.targets).enumerate() {
            v.validate()?;
            let n = w * h;
            let color_ok = t.color.as_ref().is_none_or(|c| c.len() == n);
            if (v.width, v.height) != (w, h)
                || (t.width, t.height) != (w, h)
                || t.normal.len() != n
                || t.mask.len() != n
                || !color_ok
            {
                return Err(Error::Mismatch(format!("view {k} does not share the {w}x{h} resolution")));
            }
        }
        Ok(())
    }
}

/// Corruption applied to oracle renders to mimic inconsistent generated
/// views. All zero by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Mean angular perturbation of covered normals, degrees.
    pub normal_sigma_deg: f64,
    /// Disk radius in pixels; positive dilates the mask, negative erodes it.
    pub mask_radius: i32,
    /// Per-view color offset drawn uniformly from `[-c, c]` per channel.
    pub color_shift: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn is_zero(&self) -> bool {
        self.normal_sigma_deg == 0.0 && self.mask_radius == 0 && self.color_shift == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.normal_sigma_deg >= 0.0 && self.normal_sigma_deg.is_finite())
            || !(self.color_shift >= 0.0 && self.color_shift.is_finite())
        {
            return Err(Error::InvalidArgument(format!("invalid noise spec {self:?}")));
        }
        Ok(())
    }
}

/// Renders supervision for `views` from `reference`, then applies `noise`.
pub fn render_supervision(reference: &TriangleMesh, views: &[CameraView], noise: &NoiseSpec) -> Result<SupervisionSet> {
    noise.validate()?;
    for v in views {
        v.validate()?;
    }
    let adj = reference.adjacency();
    let maps = rasterize_views(reference, &adj, views);
    let targets = maps
        .par_iter()
        .enumerate()
        .map(|(k, m)| {
            let mut t = SupervisionView::from_maps(m);
            if !noise.is_zero() {
                corrupt(&mut t, noise, k);
            }
            t
        })
        .collect();
    let set = SupervisionSet {
        views: views.to_vec(),
        targets,
        source: SupervisionSource::Oracle,
    };
    set.validate()?;
    Ok(set)
}

fn corrupt(t: &mut SupervisionView, noise: &NoiseSpec, view_index: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(view_index as u64 + 1)));
    if noise.normal_sigma_deg > 0.0 {
        jitter_normals(&mut t.normal, noise.normal_sigma_deg, &mut rng);
    }
    if noise.mask_radius != 0 {
        t.mask = morph(&t.mask, t.width, t.height, noise.mask_radius);
    }
    if noise.color_shift > 0.0 {
        if let Some(color) = &mut t.color {
            let c = noise.color_shift;
            let shift = DVec3::new(rng.random_range(-c..=c), rng.random_range(-c..=c), rng.random_range(-c..=c));
            for (px, n) in color.iter_mut().zip(&t.normal) {
                if *n != DVec3::ZERO {
                    *px = (*px + shift).clamp(DVec3::ZERO, DVec3::ONE);
                }
            }
        }
    }
}

/// Rotates each nonzero normal by a random angle about a random tangent axis.
/// The tangent offset is isotropic Gaussian with per-axis deviation
/// `sigma * sqrt(2 / pi)`, so the rotation angle is Rayleigh distributed
/// with mean `sigma`.
fn jitter_normals(normals: &mut [DVec3], sigma_deg: f64, rng: &mut ChaCha8Rng) {
    let s = sigma_deg.to_radians() * (2.0 / std::f64::consts::PI).sqrt();
    let gauss = Normal::new(0.0, s).expect("finite deviation");
    for n in normals.iter_mut() {
        if *n == DVec3::ZERO {
            continue;
        }
        let (t1, t2) = n.any_orthonormal_pair();
        let offset = t1 * gauss.sample(rng) + t2 * gauss.sample(rng);
        let angle = offset.length();
        if angle > 0.0 {
            let axis = offset / angle;
            *n = (*n * angle.cos() + axis * angle.sin()).normalize();
        }
    }
}

/// Grayscale dilation (`radius > 0`) or erosion (`radius < 0`) with a disk.
pub fn morph(mask: &[f64], width: usize, height: usize, radius: i32) -> Vec<f64> {
    let r = radius.abs();
    let dilate = radius > 0;
    let offsets: Vec<(i32, i32)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|(dx, dy)| dx * dx + dy * dy <= r * r)
        .collect();
    let mut out = vec![0.0; mask.len()];
    for y in 0..height as i32 {
        for x in 0..width as i32 {
            let mut acc = if dilate { 0.0f64 } else { 1.0f64 };
            for &(dx, dy) in &offsets {
                let (sx, sy) = (x + dx, y + dy);
                let v = if sx < 0 || sy < 0 || sx >= width as i32 || sy >= height as i32 {
                    0.0
                } else {
                    mask[sy as usize * width + sx as usize]
                };
                acc = if dilate { acc.max(v) } else { acc.min(v) };
            }
            out[y as usize * width + x as usize] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use crate::render::{rasterize, standard_views, DEFAULT_FOV_DEG, DEFAULT_RADIUS};

    fn views(res: usize) -> Vec<CameraView> {
        standard_views(6, DEFAULT_RADIUS, DEFAULT_FOV_DEG, res).unwrap()
    }

    #[test]
    fn zero_noise_matches_rasterizer_exactly() {
        let mesh = primitives::icosphere(2).transformed(0.5, DVec3::ZERO);
        let set = render_supervision(&mesh, &views(48), &NoiseSpec::default()).unwrap();
        for (v, t) in set.views.iter().zip(&set.targets) {
            let maps = rasterize(&mesh, v);
            assert_eq!(t.normal, maps.normal);
            assert_eq!(t.mask, maps.mask);
        }
    }

    #[test]
    fn normal_jitter_has_requested_mean_angle() {
        let mesh = primitives::icosphere(3).transformed(0.5, DVec3::ZERO);
        let vs = views(96);
        let clean = render_supervision(&mesh, &vs, &NoiseSpec::default()).unwrap();
        let noise = NoiseSpec {
            normal_sigma_deg: 5.0,
            seed: 3,
            ..Default::default()
        };
        let noisy = render_supervision(&mesh, &vs, &noise).unwrap();
        let (mut sum, mut n) = (0.0, 0);
        for (a, b) in clean.targets.iter().zip(&noisy.targets) {
            for (p, q) in a.normal.iter().zip(&b.normal) {
                if *p != DVec3::ZERO {
                    sum += p.dot(*q).clamp(-1.0, 1.0).acos().to_degrees();
                    n += 1;
                }
            }
        }
        let mean = sum / n as f64;
        assert!((4.0..=6.0).contains(&mean), "mean deviation {mean}");
    }

    #[test]
    fn dilation_grows_and_erosion_shrinks_the_mask() {
        let mesh = primitives::cube();
        let vs = views(64);
        let area = |r: i32| {
            let s = render_supervision(
                &mesh,
                &vs,
                &NoiseSpec {
                    mask_radius: r,
                    ..Default::default()
                },
            )
            .unwrap();
            s.targets[0].mask.iter().sum::<f64>()
        };
        let clean = area(0);
        assert!(area(2) > clean);
        assert!(area(-2) < clean);
    }

    #[test]
    fn color_shift_is_constant_per_view() {
        let mesh = primitives::icosphere(2)
            .transformed(0.5, DVec3::ZERO)
            .with_colors(vec![DVec3::splat(0.5); 162]);
        let vs = views(32);
        let noise = NoiseSpec {
            color_shift: 0.1,
            seed: 9,
            ..Default::default()
        };
        let set = render_supervision(&mesh, &vs, &noise).unwrap();
        for t in &set.targets {
            let colors: Vec<DVec3> = t
                .color
                .as_ref()
                .unwrap()
                .iter()
                .zip(&t.mask)
                .filter(|(_, m)| **m >= 1.0)
                .map(|(c, _)| *c)
                .collect();
            assert!(colors.iter().all(|c| c.distance(colors[0]) < 1e-12));
            assert!(colors[0].distance(DVec3::splat(0.5)) > 0.0);
        }
    }
}
