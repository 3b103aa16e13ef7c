//! Per-pixel geometry buffers (albedo, normal, depth, foreground mask) and
//! the two ways to obtain them: loading PFM files produced by an external
//! reconstruction, or rasterizing the body Gaussians analytically, treating
//! each 1-sigma ellipsoid as a surface.

use std::path::Path;

use rayon::prelude::*;

use crate::camera::Camera;
use crate::error::{GscError, Result};
use crate::gaussian::{AnisoGaussian, PreparedGaussian};
use crate::img::{ImageGray, ImageRgb};
use crate::math::Vec3;
use crate::pfm;

/// Deferred-shading inputs. Normals are stored as raw components; depth is
/// metric distance along the (unit) pixel ray. A pixel is foreground when
/// its mask exceeds 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct GBuffer {
    pub width: usize,
    pub height: usize,
    pub albedo: ImageRgb,
    pub normal: ImageRgb,
    pub depth: ImageGray,
    pub mask: ImageGray,
}

impl GBuffer {
    pub fn empty(width: usize, height: usize) -> Self {
        GBuffer {
            width,
            height,
            albedo: ImageRgb::filled(width, height, Vec3::zeros()),
            normal: ImageRgb::filled(width, height, Vec3::zeros()),
            depth: ImageGray::filled(width, height, 0.0),
            mask: ImageGray::filled(width, height, 0.0),
        }
    }

    #[inline]
    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.mask.get(x, y) > 0.5
    }

    /// Loads the four channel files and re-normalizes foreground normals
    /// (unit within f32 rounding after the trip through disk).
    pub fn load(
        albedo: &Path,
        normal: &Path,
        depth: &Path,
        mask: &Path,
    ) -> Result<Self> {
        let albedo = pfm::read_pfm_rgb(albedo)?;
        let mut normal = pfm::read_pfm_rgb(normal)?;
        let depth = pfm::read_pfm_gray(depth)?;
        let mask_img = pfm::read_pfm_gray(mask)?;
        let (w, h) = (albedo.width, albedo.height);
        for (name, ok) in [
            ("normal", normal.width == w && normal.height == h),
            ("depth", depth.width == w && depth.height == h),
            ("mask", mask_img.width == w && mask_img.height == h),
        ] {
            if !ok {
                return Err(GscError::Image(format!(
                    "gbuffer channel `{name}` does not match albedo dimensions {w}x{h}"
                )));
            }
        }
        for y in 0..h {
            for x in 0..w {
                if mask_img.get(x, y) > 0.5 {
                    let n = normal.get(x, y);
                    let len = n.norm();
                    if len > 1e-6 {
                        normal.set(x, y, n / len);
                    }
                }
            }
        }
        Ok(GBuffer {
            width: w,
            height: h,
            albedo,
            normal,
            depth,
            mask: mask_img,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        pfm::write_pfm_rgb(&self.albedo, &dir.join("albedo.pfm"))?;
        pfm::write_pfm_rgb(&self.normal, &dir.join("normal.pfm"))?;
        pfm::write_pfm_gray(&self.depth, &dir.join("depth.pfm"))?;
        pfm::write_pfm_gray(&self.mask, &dir.join("mask.pfm"))?;
        Ok(())
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        GBuffer::load(
            &dir.join("albedo.pfm"),
            &dir.join("normal.pfm"),
            &dir.join("depth.pfm"),
            &dir.join("mask.pfm"),
        )
    }
}

/// Nearest intersection of a ray with the 1-sigma ellipsoid of a Gaussian:
/// solves the quadratic `(v + t d)^T P (v + t d) = 1` and keeps the smallest
/// `t` above the cutoff.
fn ellipsoid_hit(g: &PreparedGaussian, origin: &Vec3, dir: &Vec3, t_min: f64) -> Option<f64> {
    let v = origin - g.mean;
    let pd = g.precision * dir;
    let a = dir.dot(&pd);
    let b = v.dot(&pd);
    let c = v.dot(&(g.precision * v)) - 1.0;
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return None;
    }
    let sqrt_disc = disc.sqrt();
    let t_near = (-b - sqrt_disc) / a;
    let t_far = (-b + sqrt_disc) / a;
    if t_near > t_min {
        Some(t_near)
    } else if t_far > t_min {
        Some(t_far)
    } else {
        None
    }
}

/// Rasterizes the Gaussians' 1-sigma ellipsoids into a G-buffer: depth is
/// the nearest hit, the normal is the ellipsoid gradient there, and the
/// albedo comes from the hit Gaussian's color.
pub fn analytic_gbuffer(
    camera: &Camera,
    gaussians: &[AnisoGaussian],
    colors: &[Vec3],
) -> Result<GBuffer> {
    if colors.len() != gaussians.len() {
        return Err(GscError::InvalidInput(format!(
            "{} gaussians but {} colors",
            gaussians.len(),
            colors.len()
        )));
    }
    let prepared = PreparedGaussian::prepare_all(gaussians);
    let (w, h) = (camera.width, camera.height);
    let pixels: Vec<(Vec3, Vec3, f64, f64)> = (0..w * h)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (idx % w, idx / w);
            let ray = camera.pixel_ray(x, y);
            let mut best: Option<(f64, usize)> = None;
            for (i, g) in prepared.iter().enumerate() {
                if let Some(t) = ellipsoid_hit(g, &ray.origin, &ray.direction, 1e-9) {
                    if best.map_or(true, |(bt, _)| t < bt) {
                        best = Some((t, i));
                    }
                }
            }
            match best {
                Some((t, i)) => {
                    let p = ray.at(t);
                    let n = (prepared[i].precision * (p - prepared[i].mean)).normalize();
                    (colors[i], n, t, 1.0)
                }
                None => (Vec3::zeros(), Vec3::zeros(), 0.0, 0.0),
            }
        })
        .collect();

    let mut gb = GBuffer::empty(w, h);
    for (idx, (albedo, normal, depth, mask)) in pixels.into_iter().enumerate() {
        gb.albedo.pixels[idx] = albedo;
        gb.normal.pixels[idx] = normal;
        gb.depth.pixels[idx] = depth;
        gb.mask.pixels[idx] = mask;
    }
    Ok(gb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Mat4;

    fn test_camera() -> Camera {
        let m = Camera::look_at(Vec3::new(0.0, -4.0, 0.0), Vec3::zeros(), Vec3::z()).unwrap();
        Camera::centered(48.0, 48, 48, m).unwrap()
    }

    #[test]
    fn sphere_hit_depth_and_normal() {
        // Unit-sigma isotropic Gaussian at origin: the 1-sigma surface is a
        // unit sphere, so the central ray hits at distance 3 with the normal
        // facing the camera.
        let g = AnisoGaussian::isotropic(Vec3::zeros(), 1.0, 1.0).unwrap();
        let cam = test_camera();
        let gb = analytic_gbuffer(&cam, &[g], &[Vec3::new(0.6, 0.5, 0.4)]).unwrap();
        let (x, y) = (24, 24);
        assert!(gb.is_foreground(x, y));
        // Pixel center (24.5, 24.5) is half a pixel off the optical axis;
        // allow a small slack on the sphere.
        assert!((gb.depth.get(x, y) - 3.0).abs() < 0.01);
        let n = gb.normal.get(x, y);
        assert!(n.y < -0.99, "normal should face the camera, got {n:?}");
        assert_eq!(gb.albedo.get(x, y), Vec3::new(0.6, 0.5, 0.4));
        // A corner pixel misses the sphere.
        assert!(!gb.is_foreground(0, 0));
        assert_eq!(gb.mask.get(0, 0), 0.0);
    }

    #[test]
    fn empty_scene_is_all_background() {
        let cam = test_camera();
        let gb = analytic_gbuffer(&cam, &[], &[]).unwrap();
        assert!(gb.mask.pixels.iter().all(|m| *m == 0.0));
    }

    #[test]
    fn nearest_gaussian_wins() {
        let near = AnisoGaussian::isotropic(Vec3::new(0.0, -1.5, 0.0), 0.3, 1.0).unwrap();
        let far = AnisoGaussian::isotropic(Vec3::new(0.0, 1.5, 0.0), 0.3, 1.0).unwrap();
        let cam = test_camera();
        let gb = analytic_gbuffer(
            &cam,
            &[far, near],
            &[Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
        )
        .unwrap();
        // Center pixel sees the near (green) ellipsoid at depth 4-1.5-0.3.
        assert_eq!(gb.albedo.get(24, 24), Vec3::new(0.0, 1.0, 0.0));
        assert!((gb.depth.get(24, 24) - 2.2).abs() < 0.01);
    }

    #[test]
    fn file_round_trip_preserves_buffers() {
        let g = AnisoGaussian::isotropic(Vec3::zeros(), 1.0, 1.0).unwrap();
        let cam = Camera::centered(
            16.0,
            16,
            16,
            Camera::look_at(Vec3::new(0.0, -4.0, 0.0), Vec3::zeros(), Vec3::z()).unwrap(),
        )
        .unwrap();
        let gb = analytic_gbuffer(&cam, &[g], &[Vec3::new(0.75, 0.75, 0.75)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        gb.save(dir.path()).unwrap();
        let back = GBuffer::load_dir(dir.path()).unwrap();
        assert_eq!(back.width, gb.width);
        for idx in 0..gb.mask.pixels.len() {
            assert_eq!(back.mask.pixels[idx], gb.mask.pixels[idx]);
            assert!((back.depth.pixels[idx] - gb.depth.pixels[idx]).abs() < 1e-6);
            if back.mask.pixels[idx] > 0.5 {
                assert!((back.normal.pixels[idx].norm() - 1.0).abs() < 1e-6);
            }
        }
        let _ = Mat4::identity();
    }
}
