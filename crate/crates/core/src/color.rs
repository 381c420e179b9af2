//! sRGB transfer functions. All in-memory colors are linear RGB.

use glam::DVec3;

pub fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

pub fn linear_to_srgb(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    if c <= 0.003_130_8 {
        c * 12.92
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

pub fn encode_u8(linear: f64) -> u8 {
    (linear_to_srgb(linear) * 255.0).round() as u8
}

pub fn decode_u8(srgb: u8) -> f64 {
    srgb_to_linear(srgb as f64 / 255.0)
}

pub fn encode_rgb(c: DVec3) -> [u8; 3] {
    [encode_u8(c.x), encode_u8(c.y), encode_u8(c.z)]
}

pub fn decode_rgb(c: [u8; 3]) -> DVec3 {
    DVec3::new(decode_u8(c[0]), decode_u8(c[1]), decode_u8(c[2]))
}
