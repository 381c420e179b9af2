use glam::DVec3;
use serde::Serialize;

use crate::error::{Error, Result};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn check(width: usize, height: usize, a: &[DVec3], b: &[DVec3]) -> Result<()> {
    if a.len() != width * height || b.len() != width * height {
        return Err(Error::Mismatch(format!(
            "images have {} and {} pixels, expected {width}x{height}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// `10 log10(1 / MSE)` over all channels; `+inf` for identical images.
pub fn psnr(width: usize, height: usize, a: &[DVec3], b: &[DVec3]) -> Result<f64> {
    check(width, height, a, b)?;
    if a.is_empty() {
        return Err(Error::InvalidArgument("empty image".into()));
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (*x - *y).length_squared()).sum();
    let mse = sum / (3 * a.len()) as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * (1.0 / mse).log10() })
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut w = [0.0; SSIM_WINDOW];
    for (i, v) in w.iter_mut().enumerate() {
        let x = i as f64 - half;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Separable Gaussian filter over the fully contained ("valid") region.
fn filter_valid(width: usize, height: usize, img: &[f64], w: &[f64; SSIM_WINDOW]) -> (usize, usize, Vec<f64>) {
    let (ow, oh) = (width + 1 - SSIM_WINDOW, height + 1 - SSIM_WINDOW);
    let mut rows = vec![0.0; ow * height];
    for y in 0..height {
        for x in 0..ow {
            rows[y * ow + x] = (0..SSIM_WINDOW).map(|k| w[k] * img[y * width + x + k]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|k| w[k] * rows[(y + k) * ow + x]).sum();
        }
    }
    (ow, oh, out)
}

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5) over the valid region,
/// averaged over the three channels. Data range is 1.
pub fn ssim(width: usize, height: usize, a: &[DVec3], b: &[DVec3]) -> Result<f64> {
    check(width, height, a, b)?;
    if width < SSIM_WINDOW || height < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {width}x{height}"
        )));
    }
    let w = gaussian_window();
    let (c1, c2) = (SSIM_K1 * SSIM_K1, SSIM_K2 * SSIM_K2);
    let mut total = 0.0;
    for ch in 0..3 {
        let x: Vec<f64> = a.iter().map(|p| p[ch]).collect();
        let y: Vec<f64> = b.iter().map(|p| p[ch]).collect();
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u * v).collect();
        let f = |img: &[f64]| filter_valid(width, height, img, &w).2;
        let (mx, my, sxx, syy, sxy) = (f(&x), f(&y), f(&xx), f(&yy), f(&xy));
        let mut sum = 0.0;
        for i in 0..mx.len() {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            sum += ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
        }
        total += sum / mx.len() as f64;
    }
    Ok(total / 3.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageReport {
    /// Mean over views; `+inf` only if every view is identical.
    pub psnr: f64,
    pub ssim: f64,
    pub views_evaluated: usize,
}

/// Averages PSNR and SSIM over paired views of equal size.
pub fn image_report(width: usize, height: usize, renders: &[Vec<DVec3>], targets: &[Vec<DVec3>]) -> Result<ImageReport> {
    if renders.len() != targets.len() || renders.is_empty() {
        return Err(Error::Mismatch(format!(
            "{} renders against {} targets",
            renders.len(),
            targets.len()
        )));
    }
    let mut p = 0.0;
    let mut s = 0.0;
    for (a, b) in renders.iter().zip(targets) {
        p += psnr(width, height, a, b)?;
        s += ssim(width, height, a, b)?;
    }
    let n = renders.len() as f64;
    Ok(ImageReport {
        psnr: p / n,
        ssim: s / n,
        views_evaluated: renders.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(v: f64) -> Vec<DVec3> {
        vec![DVec3::splat(v); 16 * 16]
    }

    #[test]
    fn identical_images() {
        let a: Vec<DVec3> = (0..256).map(|i| DVec3::splat((i % 17) as f64 / 16.0)).collect();
        assert_eq!(psnr(16, 16, &a, &a).unwrap(), f64::INFINITY);
        assert!((ssim(16, 16, &a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_offset_gives_twenty_db() {
        let p = psnr(16, 16, &uniform(0.5), &uniform(0.6)).unwrap();
        assert!((p - 20.0).abs() < 1e-9);
    }

    #[test]
    fn size_errors() {
        assert!(psnr(16, 16, &uniform(0.5), &uniform(0.5)[..10]).is_err());
        assert!(ssim(4, 4, &uniform(0.5)[..16], &uniform(0.5)[..16]).is_err());
    }

    #[test]
    fn window_is_normalized() {
        let w = gaussian_window();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w[0], w[10]);
    }
}
