//! Equirectangular environment map with a precomputed brightest texel for
//! importance-sampled relighting.
//!
//! Mapping (world +z up): azimuth = atan2(y, x) spans the columns left to
//! right over [-pi, pi); the polar angle from +z spans the rows, row 0 at
//! the zenith. Lookups are nearest-texel, which keeps a single bright sun
//! texel exactly representable.

use std::path::Path;

use crate::error::{GscError, Result};
use crate::img::ImageRgb;
use crate::math::Vec3;
use crate::pfm;

#[derive(Debug, Clone)]
pub struct EnvironmentMap {
    pub image: ImageRgb,
    brightest: (usize, usize),
}

/// Rec. 709 luminance.
fn luminance(v: &Vec3) -> f64 {
    0.2126 * v.x + 0.7152 * v.y + 0.0722 * v.z
}

impl EnvironmentMap {
    pub fn new(image: ImageRgb) -> Result<Self> {
        if image.width == 0 || image.height == 0 {
            return Err(GscError::Image("empty environment map".into()));
        }
        if image
            .pixels
            .iter()
            .any(|p| !p.iter().all(|c| c.is_finite() && *c >= 0.0))
        {
            return Err(GscError::Image(
                "environment radiance must be finite and non-negative".into(),
            ));
        }
        // Brightest texel by luminance, ties broken by lowest row-major index.
        let mut brightest = (0usize, 0usize);
        let mut best = f64::NEG_INFINITY;
        for y in 0..image.height {
            for x in 0..image.width {
                let l = luminance(&image.get(x, y));
                if l > best {
                    best = l;
                    brightest = (x, y);
                }
            }
        }
        Ok(EnvironmentMap { image, brightest })
    }

    pub fn from_pfm(path: &Path) -> Result<Self> {
        EnvironmentMap::new(pfm::read_pfm_rgb(path)?)
    }

    /// Texel containing a direction.
    pub fn texel_of(&self, dir: &Vec3) -> (usize, usize) {
        let d = dir.normalize();
        let azimuth = d.y.atan2(d.x); // [-pi, pi]
        let polar = d.z.clamp(-1.0, 1.0).acos(); // [0, pi]
        let u = (azimuth + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
        let v = polar / std::f64::consts::PI;
        let x = ((u * self.image.width as f64) as usize).min(self.image.width - 1);
        let y = ((v * self.image.height as f64) as usize).min(self.image.height - 1);
        (x, y)
    }

    /// Unit direction through a texel center.
    pub fn texel_direction(&self, x: usize, y: usize) -> Vec3 {
        let azimuth = (x as f64 + 0.5) / self.image.width as f64 * 2.0 * std::f64::consts::PI
            - std::f64::consts::PI;
        let polar = (y as f64 + 0.5) / self.image.height as f64 * std::f64::consts::PI;
        Vec3::new(
            polar.sin() * azimuth.cos(),
            polar.sin() * azimuth.sin(),
            polar.cos(),
        )
    }

    /// Exact solid angle of one texel in row `y`.
    pub fn texel_solid_angle(&self, y: usize) -> f64 {
        let t0 = y as f64 / self.image.height as f64 * std::f64::consts::PI;
        let t1 = (y + 1) as f64 / self.image.height as f64 * std::f64::consts::PI;
        (2.0 * std::f64::consts::PI / self.image.width as f64) * (t0.cos() - t1.cos())
    }

    /// Nearest-texel radiance lookup.
    pub fn radiance(&self, dir: &Vec3) -> Vec3 {
        let (x, y) = self.texel_of(dir);
        self.image.get(x, y)
    }

    /// Radiance with the brightest texel masked to zero; the explicit sun
    /// ray owns that texel, so the diffuse estimator must not count it.
    pub fn radiance_excluding_brightest(&self, dir: &Vec3) -> Vec3 {
        let t = self.texel_of(dir);
        if t == self.brightest {
            Vec3::zeros()
        } else {
            self.image.get(t.0, t.1)
        }
    }

    pub fn brightest_texel(&self) -> (usize, usize) {
        self.brightest
    }

    pub fn brightest_direction(&self) -> Vec3 {
        self.texel_direction(self.brightest.0, self.brightest.1)
    }

    pub fn brightest_radiance(&self) -> Vec3 {
        self.image.get(self.brightest.0, self.brightest.1)
    }

    pub fn brightest_solid_angle(&self) -> f64 {
        self.texel_solid_angle(self.brightest.1)
    }

    /// Constant-radiance sky, useful for estimator checks.
    pub fn constant(width: usize, height: usize, radiance: Vec3) -> Result<Self> {
        EnvironmentMap::new(ImageRgb::filled(width, height, radiance))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn texel_mapping_round_trips() {
        let env = EnvironmentMap::constant(64, 32, Vec3::new(1.0, 1.0, 1.0)).unwrap();
        for (x, y) in [(0, 0), (10, 5), (63, 31), (32, 16)] {
            let dir = env.texel_direction(x, y);
            assert_eq!(env.texel_of(&dir), (x, y));
        }
    }

    #[test]
    fn solid_angles_sum_to_sphere() {
        let env = EnvironmentMap::constant(16, 8, Vec3::new(1.0, 1.0, 1.0)).unwrap();
        let total: f64 = (0..8)
            .map(|y| env.texel_solid_angle(y) * 16.0)
            .sum();
        assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn brightest_texel_ties_break_low_index() {
        let mut img = ImageRgb::filled(8, 4, Vec3::new(0.2, 0.2, 0.2));
        img.set(3, 1, Vec3::new(5.0, 5.0, 5.0));
        img.set(6, 2, Vec3::new(5.0, 5.0, 5.0)); // same luminance, later index
        let env = EnvironmentMap::new(img).unwrap();
        assert_eq!(env.brightest_texel(), (3, 1));
        let dir = env.brightest_direction();
        assert_eq!(env.radiance(&dir), Vec3::new(5.0, 5.0, 5.0));
        assert_eq!(env.radiance_excluding_brightest(&dir), Vec3::zeros());
    }

    #[test]
    fn up_direction_hits_top_row() {
        let env = EnvironmentMap::constant(32, 16, Vec3::new(1.0, 1.0, 1.0)).unwrap();
        let (_, y) = env.texel_of(&Vec3::z());
        assert_eq!(y, 0);
        let (_, y) = env.texel_of(&(-Vec3::z()));
        assert_eq!(y, 15);
    }

    #[test]
    fn rejects_negative_radiance() {
        let img = ImageRgb::filled(4, 2, Vec3::new(-0.1, 0.0, 0.0));
        assert!(EnvironmentMap::new(img).is_err());
    }
}
