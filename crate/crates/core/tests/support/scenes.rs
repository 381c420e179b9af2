//! Random placement scenes and a brute-force overlap oracle that shares no
//! code with the separating-axis test under scrutiny.
#![allow(dead_code)]

use glam::DVec2;
use meshloop::scene::{find_collision_free, GroundSurface, ObstacleTrack, PoseSampling, Rect2, Region};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corners(r: &Rect2) -> [DVec2; 4] {
    let (s, c) = r.yaw.sin_cos();
    let u = DVec2::new(c, s) * r.half_extents[0];
    let v = DVec2::new(-s, c) * r.half_extents[1];
    let o = DVec2::new(r.center[0], r.center[1]);
    [o - u - v, o + u - v, o + u + v, o - u + v]
}

fn cross(a: DVec2, b: DVec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Closed segments `p0-p1` and `q0-q1` share a point.
fn segments_meet(p0: DVec2, p1: DVec2, q0: DVec2, q1: DVec2) -> bool {
    let d1 = cross(q1 - q0, p0 - q0);
    let d2 = cross(q1 - q0, p1 - q0);
    let d3 = cross(p1 - p0, q0 - p0);
    let d4 = cross(p1 - p0, q1 - p0);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: DVec2, b: DVec2, p: DVec2, d: f64| {
        d == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
    };
    on(q0, q1, p0, d1) || on(q0, q1, p1, d2) || on(p0, p1, q0, d3) || on(p0, p1, q1, d4)
}

/// Point inside or on a convex counter-clockwise polygon.
fn inside(poly: &[DVec2; 4], p: DVec2) -> bool {
    (0..4).all(|i| cross(poly[(i + 1) % 4] - poly[i], p - poly[i]) >= 0.0)
}

/// Two closed rectangles overlap iff some pair of edges meets or one holds a
/// corner of the other.
pub fn rects_overlap(a: &Rect2, b: &Rect2) -> bool {
    let (ca, cb) = (corners(a), corners(b));
    for i in 0..4 {
        for j in 0..4 {
            if segments_meet(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4]) {
                return true;
            }
        }
    }
    inside(&ca, cb[0]) || inside(&cb, ca[0])
}

fn grown(r: &Rect2, m: f64) -> Rect2 {
    Rect2 {
        half_extents: [r.half_extents[0] + m, r.half_extents[1] + m],
        ..*r
    }
}

pub struct Scene {
    pub tracks: Vec<ObstacleTrack>,
    pub asset: Rect2,
    pub region: Region,
    pub n_poses: usize,
    pub clearance: f64,
}

/// A street-sized region with a handful of moving boxes.
pub fn random_scene(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = rng.random_range(3.0..12.0);
    let h = rng.random_range(3.0..12.0);
    let region = Region {
        min: [-w / 2.0, -h / 2.0],
        max: [w / 2.0, h / 2.0],
    };
    let tracks = (0..rng.random_range(0..7))
        .map(|k| {
            let mut p = DVec2::new(rng.random_range(-w / 2.0..w / 2.0), rng.random_range(-h / 2.0..h / 2.0));
            let heading = rng.random_range(0.0..std::f64::consts::TAU);
            let speed = rng.random_range(0.0..0.6);
            let half = [rng.random_range(0.2..2.5), rng.random_range(0.2..1.2)];
            let footprints = (0..rng.random_range(1..12))
                .map(|_| {
                    p += speed * DVec2::from_angle(heading);
                    Rect2 {
                        center: p.to_array(),
                        yaw: heading,
                        half_extents: half,
                    }
                })
                .collect();
            ObstacleTrack {
                id: format!("track{k}"),
                start: rng.random_range(0..5),
                footprints,
            }
        })
        .collect();
    let asset = Rect2 {
        center: [rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)],
        yaw: rng.random_range(-0.5..0.5),
        half_extents: [rng.random_range(0.1..0.8), rng.random_range(0.1..0.8)],
    };
    Scene {
        tracks,
        asset,
        region,
        n_poses: rng.random_range(1..9),
        clearance: rng.random_range(0.0..0.5),
    }
}

pub fn sample(scene: &Scene, seed: u64) -> PoseSampling {
    find_collision_free(
        &GroundSurface::flat(),
        &scene.tracks,
        &scene.asset,
        &scene.region,
        scene.n_poses,
        scene.clearance,
        seed,
    )
    .unwrap()
}

/// Overlaps the oracle finds for the emitted poses: each grown footprint
/// against every obstacle frame and every earlier pose.
pub fn violations(scene: &Scene, result: &PoseSampling) -> usize {
    let mut bad = 0;
    for (i, p) in result.poses.iter().enumerate() {
        let g = grown(&p.footprint, scene.clearance);
        for t in &scene.tracks {
            bad += t.footprints.iter().filter(|o| rects_overlap(&g, o)).count();
        }
        bad += result.poses[..i].iter().filter(|q| rects_overlap(&g, &q.footprint)).count();
    }
    bad
}
