use glam::{DVec2, DVec3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pinhole camera orbiting `look_at`.
///
/// Azimuth is measured in the XY plane from +X towards +Y, elevation from the
/// XY plane towards +Z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraView {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub radius: f64,
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub look_at: [f64; 3],
}

pub const DEFAULT_RESOLUTION: usize = 256;
pub const DEFAULT_FOV_DEG: f64 = 40.0;
/// Keeps the bounding sphere of a unit-box mesh (radius `sqrt(3)/2`) inside a
/// 40 degree frustum with a margin.
pub const DEFAULT_RADIUS: f64 = 2.8;

/// Points closer than this to the camera plane are not rasterized.
pub const NEAR: f64 = 1e-3;

impl CameraView {
    pub fn new(azimuth_deg: f64, elevation_deg: f64, radius: f64, fov_deg: f64, size: usize) -> Self {
        Self {
            azimuth_deg,
            elevation_deg,
            radius,
            fov_deg,
            width: size,
            height: size,
            look_at: [0.0; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::InvalidArgument(format!(
                "fov must be in (0, 180), got {}",
                self.fov_deg
            )));
        }
        if self.width < 8 || self.height < 8 {
            return Err(Error::InvalidArgument(format!(
                "image must be at least 8x8, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.radius > 0.0) {
            return Err(Error::InvalidArgument("camera radius must be positive".into()));
        }
        Ok(())
    }

    pub fn target(&self) -> DVec3 {
        DVec3::from_array(self.look_at)
    }

    pub fn position(&self) -> DVec3 {
        let (az, el) = (self.azimuth_deg.to_radians(), self.elevation_deg.to_radians());
        self.target() + self.radius * DVec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
    }

    pub fn with_resolution(&self, width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            ..self.clone()
        }
    }

    pub fn projector(&self) -> Projector {
        let eye = self.position();
        let forward = (self.target() - eye).normalize();
        let right = forward
            .cross(DVec3::Z)
            .try_normalize()
            .unwrap_or_else(|| forward.cross(DVec3::Y).normalize());
        let up = right.cross(forward);
        Projector {
            eye,
            right,
            up,
            forward,
            focal: 0.5 * self.height as f64 / (0.5 * self.fov_deg.to_radians()).tan(),
            cx: 0.5 * self.width as f64,
            cy: 0.5 * self.height as f64,
            width: self.width,
            height: self.height,
        }
    }
}

/// `n` fixed views around the origin.
///
/// * `n = 4`: azimuths 0, 90, 180, 270 at elevation 0.
/// * `n = 6` or `8`: azimuths evenly spaced from 30 degrees, elevations
///   alternating +20 / -10.
pub fn standard_views(n: usize, radius: f64, fov_deg: f64, resolution: usize) -> Result<Vec<CameraView>> {
    let views: Vec<CameraView> = match n {
        4 => (0..4)
            .map(|k| CameraView::new(90.0 * k as f64, 0.0, radius, fov_deg, resolution))
            .collect(),
        6 | 8 => (0..n)
            .map(|k| {
                let az = 30.0 + 360.0 * k as f64 / n as f64;
                let el = if k % 2 == 0 { 20.0 } else { -10.0 };
                CameraView::new(az, el, radius, fov_deg, resolution)
            })
            .collect(),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unsupported view count {n}; expected 4, 6 or 8"
            )))
        }
    };
    for v in &views {
        v.validate()?;
    }
    Ok(views)
}

/// World to pixel mapping of one view. Pixel `(i, j)` covers
/// `[i, i+1] x [j, j+1]`; rows grow downwards.
#[derive(Debug, Clone, Copy)]
pub struct Projector {
    pub eye: DVec3,
    pub right: DVec3,
    pub up: DVec3,
    pub forward: DVec3,
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Projector {
    pub fn to_camera(&self, p: DVec3) -> DVec3 {
        let d = p - self.eye;
        DVec3::new(self.right.dot(d), self.up.dot(d), self.forward.dot(d))
    }

    /// Pixel coordinates and depth along the viewing axis; `None` behind the
    /// near plane.
    pub fn project(&self, p: DVec3) -> Option<(DVec2, f64)> {
        let c = self.to_camera(p);
        (c.z > NEAR).then(|| {
            (
                DVec2::new(self.cx + self.focal * c.x / c.z, self.cy - self.focal * c.y / c.z),
                c.z,
            )
        })
    }

    /// Rows of d(pixel)/d(world position) at `p`.
    pub fn jacobian(&self, p: DVec3) -> [DVec3; 2] {
        let c = self.to_camera(p);
        let inv = 1.0 / c.z;
        [
            self.focal * inv * (self.right - c.x * inv * self.forward),
            -self.focal * inv * (self.up - c.y * inv * self.forward),
        ]
    }

    pub fn contains(&self, s: DVec2) -> bool {
        s.x >= 0.0 && s.y >= 0.0 && s.x < self.width as f64 && s.y < self.height as f64
    }
}
