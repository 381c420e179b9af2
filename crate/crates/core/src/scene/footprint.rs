use glam::DVec2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Oriented rectangle on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect2 {
    pub center: [f64; 2],
    pub yaw: f64,
    pub half_extents: [f64; 2],
}

impl Rect2 {
    pub fn validate(&self) -> Result<()> {
        let finite = self.center.iter().chain(&self.half_extents).all(|v| v.is_finite()) && self.yaw.is_finite();
        if !finite || !(self.half_extents[0] > 0.0 && self.half_extents[1] > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "footprint needs finite values and positive half-extents, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn axes(&self) -> [DVec2; 2] {
        let u = DVec2::from_angle(self.yaw);
        [u, u.perp()]
    }

    pub fn corners(&self) -> [DVec2; 4] {
        let c = DVec2::from_array(self.center);
        let [u, v] = self.axes();
        let (a, b) = (u * self.half_extents[0], v * self.half_extents[1]);
        [c - a - b, c + a - b, c + a + b, c - a + b]
    }

    pub fn inflated(&self, margin: f64) -> Rect2 {
        Rect2 {
            half_extents: [self.half_extents[0] + margin, self.half_extents[1] + margin],
            ..*self
        }
    }

    pub fn contains_point(&self, p: DVec2, tol: f64) -> bool {
        let d = p - DVec2::from_array(self.center);
        let [u, v] = self.axes();
        d.dot(u).abs() <= self.half_extents[0] + tol && d.dot(v).abs() <= self.half_extents[1] + tol
    }

    /// Separating-axis test over the four edge normals. Touching rectangles
    /// count as intersecting.
    pub fn intersects(&self, other: &Rect2) -> bool {
        let (ca, cb) = (self.corners(), other.corners());
        for axis in self.axes().into_iter().chain(other.axes()) {
            let (amin, amax) = project(&ca, axis);
            let (bmin, bmax) = project(&cb, axis);
            if amax < bmin || bmax < amin {
                return false;
            }
        }
        true
    }
}

fn project(corners: &[DVec2; 4], axis: DVec2) -> (f64, f64) {
    corners
        .iter()
        .map(|c| c.dot(axis))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Axis-aligned sampling region on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        if !(self.min[0] <= self.max[0] && self.min[1] <= self.max[1]) || !self.min.iter().chain(&self.max).all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(format!("region min must not exceed max, got {self:?}")));
        }
        Ok(())
    }

    pub fn corners(&self) -> [DVec2; 4] {
        let (a, b) = (DVec2::from_array(self.min), DVec2::from_array(self.max));
        [a, DVec2::new(b.x, a.y), b, DVec2::new(a.x, b.y)]
    }
}
