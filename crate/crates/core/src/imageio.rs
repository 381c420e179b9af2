//! PFM float maps and 8-bit PNG images.
//!
//! In memory, images are row-major with row 0 at the top. PFM stores rows
//! bottom-to-top; that flip happens here.

use std::fs;
use std::path::Path;

use glam::DVec3;
use image::{GrayImage, RgbImage};

use crate::color;
use crate::error::{Error, Result};

/// Little-endian PFM; `channels` is 1 (`Pf`) or 3 (`PF`).
pub fn write_pfm(path: impl AsRef<Path>, width: usize, height: usize, channels: usize, data: &[f32]) -> Result<()> {
    let path = path.as_ref();
    let tag = match channels {
        1 => "Pf",
        3 => "PF",
        _ => return Err(Error::InvalidArgument(format!("PFM supports 1 or 3 channels, got {channels}"))),
    };
    if data.len() != width * height * channels {
        return Err(Error::Mismatch(format!(
            "{} samples for a {width}x{height}x{channels} map",
            data.len()
        )));
    }
    let mut out = format!("{tag}\n{width} {height}\n-1.0\n").into_bytes();
    out.reserve(data.len() * 4);
    let row = width * channels;
    for y in (0..height).rev() {
        for v in &data[y * row..(y + 1) * row] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Returns `(width, height, channels, data)` with row 0 at the top.
pub fn read_pfm(path: impl AsRef<Path>) -> Result<(usize, usize, usize, Vec<f32>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::Parse {
        path: path.to_path_buf(),
        location: "header".into(),
        message: msg.into(),
    };
    // header: three whitespace-terminated tokens lines
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 && pos < bytes.len() {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).to_string());
    }
    pos += 1; // single whitespace after the scale
    if fields.len() < 4 {
        return Err(bad("truncated header"));
    }
    let channels = match fields[0].as_str() {
        "Pf" => 1,
        "PF" => 3,
        _ => return Err(bad("not a PFM file")),
    };
    let width: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let height: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    let scale: f64 = fields[3].parse().map_err(|_| bad("bad scale"))?;
    let little = scale < 0.0;
    let n = width * height * channels;
    if bytes.len() < pos + 4 * n {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            location: format!("byte {}", bytes.len()),
            message: format!("expected {} bytes of samples", 4 * n),
        });
    }
    let mut data = vec![0f32; n];
    let row = width * channels;
    for (k, chunk) in bytes[pos..pos + 4 * n].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (file_row, col) = (k / row, k % row);
        data[(height - 1 - file_row) * row + col] = v;
    }
    Ok((width, height, channels, data))
}

pub fn write_vec3_pfm(path: impl AsRef<Path>, width: usize, height: usize, data: &[DVec3]) -> Result<()> {
    let flat: Vec<f32> = data.iter().flat_map(|v| [v.x as f32, v.y as f32, v.z as f32]).collect();
    write_pfm(path, width, height, 3, &flat)
}

pub fn write_scalar_pfm(path: impl AsRef<Path>, width: usize, height: usize, data: &[f64]) -> Result<()> {
    let flat: Vec<f32> = data.iter().map(|&v| v as f32).collect();
    write_pfm(path, width, height, 1, &flat)
}

pub fn read_vec3_pfm(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<DVec3>)> {
    let path = path.as_ref();
    let (w, h, c, data) = read_pfm(path)?;
    if c != 3 {
        return Err(Error::Mismatch(format!("{} has {c} channels, expected 3", path.display())));
    }
    let v = data
        .chunks_exact(3)
        .map(|p| DVec3::new(p[0] as f64, p[1] as f64, p[2] as f64))
        .collect();
    Ok((w, h, v))
}

pub fn read_scalar_pfm(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f64>)> {
    let path = path.as_ref();
    let (w, h, c, data) = read_pfm(path)?;
    if c != 1 {
        return Err(Error::Mismatch(format!("{} has {c} channels, expected 1", path.display())));
    }
    Ok((w, h, data.into_iter().map(f64::from).collect()))
}

/// 8-bit grayscale PNG of values in `[0, 1]` (no transfer curve).
pub fn write_mask_png(path: impl AsRef<Path>, width: usize, height: usize, mask: &[f64]) -> Result<()> {
    let px: Vec<u8> = mask.iter().map(|&m| (m.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let img = GrayImage::from_raw(width as u32, height as u32, px)
        .ok_or_else(|| Error::Mismatch("mask size does not match dimensions".into()))?;
    img.save(path.as_ref())?;
    Ok(())
}

pub fn read_mask_png(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f64>)> {
    let img = image::open(path.as_ref())?.into_luma8();
    let (w, h) = img.dimensions();
    Ok((w as usize, h as usize, img.into_raw().into_iter().map(|v| v as f64 / 255.0).collect()))
}

/// 8-bit sRGB PNG of linear colors.
pub fn write_color_png(path: impl AsRef<Path>, width: usize, height: usize, rgb: &[DVec3]) -> Result<()> {
    let px: Vec<u8> = rgb.iter().flat_map(|&c| color::encode_rgb(c)).collect();
    let img = RgbImage::from_raw(width as u32, height as u32, px)
        .ok_or_else(|| Error::Mismatch("color size does not match dimensions".into()))?;
    img.save(path.as_ref())?;
    Ok(())
}

/// Decodes an 8-bit sRGB PNG into linear colors.
pub fn read_color_png(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<DVec3>)> {
    let img = image::open(path.as_ref())?.into_rgb8();
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| color::decode_rgb(p.0)).collect();
    Ok((w as usize, h as usize, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfm_round_trip_preserves_orientation_and_infinity() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pfm");
        let data = vec![1.0, 2.0, 3.0, f64::INFINITY, 5.0, 6.0];
        write_scalar_pfm(&p, 3, 2, &data).unwrap();
        let (w, h, back) = read_scalar_pfm(&p).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(back, data);
        let bytes = fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"Pf\n3 2\n-1.0\n"));
        // first stored row is the bottom one
        assert_eq!(&bytes[12..16], &(f64::INFINITY as f32).to_le_bytes());
    }

    #[test]
    fn color_png_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.png");
        let data: Vec<DVec3> = (0..64).map(|i| DVec3::new(i as f64 / 63.0, 0.5, 1.0 - i as f64 / 63.0)).collect();
        write_color_png(&p, 8, 8, &data).unwrap();
        let (_, _, back) = read_color_png(&p).unwrap();
        for (a, b) in data.iter().zip(&back) {
            assert!((crate::color::linear_to_srgb(a.x) - crate::color::linear_to_srgb(b.x)).abs() <= 0.5 / 255.0 + 1e-9);
        }
    }
}
