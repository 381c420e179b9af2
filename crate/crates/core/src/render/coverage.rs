//! Exact area of a projected triangle inside a pixel square, with forward-mode
//! derivatives with respect to the triangle's six screen coordinates.

use std::ops::{Add, Div, Mul, Sub};

use glam::DVec2;
use smallvec::SmallVec;

pub(crate) trait Real:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(self) -> f64;
}

impl Real for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
}

/// Value plus gradient with respect to `(x0, y0, x1, y1, x2, y2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dual6 {
    pub v: f64,
    pub d: [f64; 6],
}

impl Dual6 {
    fn seed(v: f64, slot: usize) -> Self {
        let mut d = [0.0; 6];
        d[slot] = 1.0;
        Self { v, d }
    }

    fn zip(self, o: Self, v: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut d = [0.0; 6];
        for k in 0..6 {
            d[k] = f(self.d[k], o.d[k]);
        }
        Self { v, d }
    }
}

impl Add for Dual6 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.zip(o, self.v + o.v, |a, b| a + b)
    }
}

impl Sub for Dual6 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.zip(o, self.v - o.v, |a, b| a - b)
    }
}

impl Mul for Dual6 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (x, y) = (self.v, o.v);
        self.zip(o, x * y, |a, b| a * y + x * b)
    }
}

impl Div for Dual6 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let (x, y) = (self.v, o.v);
        let inv = 1.0 / y;
        self.zip(o, x * inv, |a, b| (a - x * inv * b) * inv)
    }
}

impl Real for Dual6 {
    fn constant(v: f64) -> Self {
        Self { v, d: [0.0; 6] }
    }
    fn value(self) -> f64 {
        self.v
    }
}

type Poly<T> = SmallVec<[(T, T); 10]>;

/// Keeps the part of `poly` where `coord(axis) >= c` (or `<= c`).
fn clip<T: Real>(poly: &Poly<T>, axis: usize, c: f64, keep_greater: bool) -> Poly<T> {
    let coord = |p: &(T, T)| if axis == 0 { p.0.value() } else { p.1.value() };
    let inside = |p: &(T, T)| {
        if keep_greater {
            coord(p) >= c
        } else {
            coord(p) <= c
        }
    };
    let mut out = Poly::new();
    let n = poly.len();
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let (pin, qin) = (inside(&p), inside(&q));
        if pin {
            out.push(p);
        }
        if pin != qin {
            let (pc, qc) = if axis == 0 { (p.0, q.0) } else { (p.1, q.1) };
            let t = (T::constant(c) - pc) / (qc - pc);
            out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    out
}

/// Unsigned area of triangle `tri` inside `[x0, x0+1] x [y0, y0+1]`.
/// `orientation` is the sign of the triangle's signed screen area.
fn clipped_area<T: Real>(tri: [(T, T); 3], x0: f64, y0: f64, orientation: f64) -> T {
    let mut poly: Poly<T> = SmallVec::from_slice(&tri);
    for (axis, c, keep_greater) in [(0, x0, true), (0, x0 + 1.0, false), (1, y0, true), (1, y0 + 1.0, false)] {
        poly = clip(&poly, axis, c, keep_greater);
        if poly.len() < 3 {
            return T::constant(0.0);
        }
    }
    let mut twice = T::constant(0.0);
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        twice = twice + (a.0 * b.1 - b.0 * a.1);
    }
    twice * T::constant(0.5 * orientation)
}

pub(crate) fn pixel_overlap(tri: [DVec2; 3], px: usize, py: usize) -> f64 {
    let orientation = signed_area2(tri).signum();
    clipped_area(tri.map(|p| (p.x, p.y)), px as f64, py as f64, orientation)
}

/// Overlap area and its gradient with respect to the three screen vertices.
pub(crate) fn pixel_overlap_grad(tri: [DVec2; 3], px: usize, py: usize) -> (f64, [DVec2; 3]) {
    let orientation = signed_area2(tri).signum();
    let duals = [
        (Dual6::seed(tri[0].x, 0), Dual6::seed(tri[0].y, 1)),
        (Dual6::seed(tri[1].x, 2), Dual6::seed(tri[1].y, 3)),
        (Dual6::seed(tri[2].x, 4), Dual6::seed(tri[2].y, 5)),
    ];
    let a = clipped_area(duals, px as f64, py as f64, orientation);
    (
        a.v,
        [
            DVec2::new(a.d[0], a.d[1]),
            DVec2::new(a.d[2], a.d[3]),
            DVec2::new(a.d[4], a.d[5]),
        ],
    )
}

pub(crate) fn signed_area2(t: [DVec2; 3]) -> f64 {
    (t[1] - t[0]).perp_dot(t[2] - t[0])
}

/// True if segment `a -> b` touches the square `[x0, x0+1] x [y0, y0+1]`
/// (Liang-Barsky with a small tolerance).
pub(crate) fn segment_touches_pixel(a: DVec2, b: DVec2, px: usize, py: usize) -> bool {
    const EPS: f64 = 1e-9;
    let (xmin, xmax) = (px as f64 - EPS, px as f64 + 1.0 + EPS);
    let (ymin, ymax) = (py as f64 - EPS, py as f64 + 1.0 + EPS);
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [
        (-d.x, a.x - xmin),
        (d.x, xmax - a.x),
        (-d.y, a.y - ymin),
        (d.y, ymax - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> DVec2 {
        DVec2::new(x, y)
    }

    #[test]
    fn triangle_covering_pixel_gives_unit_area() {
        let tri = [v(-5.0, -5.0), v(10.0, -5.0), v(-5.0, 10.0)];
        assert!((pixel_overlap(tri, 0, 0) - 1.0).abs() < 1e-12);
        let rev = [tri[0], tri[2], tri[1]];
        assert!((pixel_overlap(rev, 0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_plane_cut() {
        // hypotenuse x + y = 1 splits the unit pixel in half
        let tri = [v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0)];
        assert!((pixel_overlap(tri, 0, 0) - 0.5).abs() < 1e-12);
        let tri = [v(0.25, -3.0), v(0.25, 4.0), v(-9.0, 0.5)];
        assert!((pixel_overlap(tri, 0, 0) - 0.25).abs() < 1e-12);
        assert_eq!(pixel_overlap(tri, 3, 0), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let tri = [v(0.3, -0.4), v(1.7, 0.6), v(-0.2, 1.3)];
        let (a, g) = pixel_overlap_grad(tri, 0, 0);
        assert!((a - pixel_overlap(tri, 0, 0)).abs() < 1e-14);
        let h = 1e-6;
        for k in 0..3 {
            for axis in 0..2 {
                let mut plus = tri;
                let mut minus = tri;
                plus[k][axis] += h;
                minus[k][axis] -= h;
                let fd = (pixel_overlap(plus, 0, 0) - pixel_overlap(minus, 0, 0)) / (2.0 * h);
                assert!((fd - g[k][axis]).abs() < 1e-6, "vertex {k} axis {axis}: {fd} vs {}", g[k][axis]);
            }
        }
    }

    #[test]
    fn segment_pixel_intersection() {
        assert!(segment_touches_pixel(v(-1.0, 0.5), v(2.0, 0.5), 0, 0));
        assert!(!segment_touches_pixel(v(-1.0, 1.5), v(2.0, 1.5), 0, 0));
        assert!(segment_touches_pixel(v(0.5, 0.5), v(0.6, 0.6), 0, 0));
        assert!(!segment_touches_pixel(v(2.0, 2.0), v(3.0, 5.0), 0, 0));
    }
}
