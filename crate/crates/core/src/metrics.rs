//! Image quality metrics.

use crate::error::{GscError, Result};
use crate::img::{ImageGray, ImageRgb};

/// Peak signal-to-noise ratio in dB for unit-range images:
/// `10 * log10(1 / MSE)` over the (optionally masked) pixels. Identical
/// images return `f64::INFINITY`.
pub fn psnr(a: &ImageRgb, b: &ImageRgb, mask: Option<&ImageGray>) -> Result<f64> {
    if !a.same_size(b) {
        return Err(GscError::InvalidInput(format!(
            "image sizes differ: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    if let Some(m) = mask {
        if m.width != a.width || m.height != a.height {
            return Err(GscError::InvalidInput("mask size differs from images".into()));
        }
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for idx in 0..a.pixels.len() {
        if let Some(m) = mask {
            if m.pixels[idx] <= 0.5 {
                continue;
            }
        }
        let d = a.pixels[idx] - b.pixels[idx];
        sum += d.x * d.x + d.y * d.y + d.z * d.z;
        count += 1;
    }
    if count == 0 {
        return Err(GscError::InvalidInput("no pixels selected by the mask".into()));
    }
    let mse = sum / (3 * count) as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}
