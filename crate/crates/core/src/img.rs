//! Float image buffers (linear radiance, row-major, top-down) plus PNG
//! output with sRGB encoding for LDR results.

use std::path::Path;

use crate::error::{GscError, Result};
use crate::math::Vec3;

/// RGB float image; pixel (x, y) lives at `y * width + x`, row 0 on top.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Vec3>,
}

impl ImageRgb {
    pub fn filled(width: usize, height: usize, value: Vec3) -> Self {
        ImageRgb {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Vec3 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: Vec3) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn same_size(&self, other: &ImageRgb) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Single-channel float image with the same layout as [`ImageRgb`].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGray {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl ImageGray {
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        ImageGray {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.pixels[y * self.width + x] = v;
    }
}

pub fn linear_to_srgb(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if x <= 0.0031308 {
        12.92 * x
    } else {
        1.055 * x.powf(1.0 / 2.4) - 0.055
    }
}

pub fn srgb_to_linear(s: f64) -> f64 {
    if s <= 0.04045 {
        s / 12.92
    } else {
        ((s + 0.055) / 1.055).powf(2.4)
    }
}

/// Writes the image as 8-bit sRGB PNG (values clamped to [0, 1]).
pub fn write_png(image: &ImageRgb, path: &Path) -> Result<()> {
    let mut out = image::RgbImage::new(image.width as u32, image.height as u32);
    for y in 0..image.height {
        for x in 0..image.width {
            let v = image.get(x, y);
            let px = [
                (linear_to_srgb(v.x) * 255.0).round() as u8,
                (linear_to_srgb(v.y) * 255.0).round() as u8,
                (linear_to_srgb(v.z) * 255.0).round() as u8,
            ];
            out.put_pixel(x as u32, y as u32, image::Rgb(px));
        }
    }
    out.save(path).map_err(|e| GscError::Image(e.to_string()))
}

/// Reads an 8-bit PNG and decodes sRGB back to linear radiance.
pub fn read_png(path: &Path) -> Result<ImageRgb> {
    let decoded = image::open(path)
        .map_err(|e| GscError::Image(e.to_string()))?
        .to_rgb8();
    let (w, h) = decoded.dimensions();
    let mut out = ImageRgb::filled(w as usize, h as usize, Vec3::zeros());
    for (x, y, px) in decoded.enumerate_pixels() {
        out.set(
            x as usize,
            y as usize,
            Vec3::new(
                srgb_to_linear(px[0] as f64 / 255.0),
                srgb_to_linear(px[1] as f64 / 255.0),
                srgb_to_linear(px[2] as f64 / 255.0),
            ),
        );
    }
    Ok(out)
}

/// Reads an 8-bit PNG as raw values in [0, 1] without undoing the sRGB
/// transfer, the convention image metrics are usually quoted in.
pub fn read_png_raw(path: &Path) -> Result<ImageRgb> {
    let decoded = image::open(path)
        .map_err(|e| GscError::Image(e.to_string()))?
        .to_rgb8();
    let (w, h) = decoded.dimensions();
    let mut out = ImageRgb::filled(w as usize, h as usize, Vec3::zeros());
    for (x, y, px) in decoded.enumerate_pixels() {
        out.set(
            x as usize,
            y as usize,
            Vec3::new(
                px[0] as f64 / 255.0,
                px[1] as f64 / 255.0,
                px[2] as f64 / 255.0,
            ),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn srgb_round_trip() {
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((srgb_to_linear(linear_to_srgb(x)) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn png_round_trip_within_quantization() {
        let mut img = ImageRgb::filled(8, 4, Vec3::zeros());
        for y in 0..4 {
            for x in 0..8 {
                img.set(x, y, Vec3::new(x as f64 / 7.0, y as f64 / 3.0, 0.25));
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.png");
        write_png(&img, &path).unwrap();
        let back = read_png(&path).unwrap();
        assert_eq!(back.width, 8);
        assert_eq!(back.height, 4);
        for (a, b) in img.pixels.iter().zip(&back.pixels) {
            // One LDR level in sRGB is at most ~0.3% linear error at the top
            // of the range and more near black; 1/100 is a safe envelope.
            assert!((a - b).abs().max() < 0.01);
        }
    }
}
