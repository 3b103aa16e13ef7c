//! Target density field on a regular voxel grid with trilinear
//! interpolation, standing in for the volumetric density the body Gaussians
//! are fitted to.
//!
//! Grid file format (little-endian throughout):
//!   3 x u32   resolution nx, ny, nz (each >= 2)
//!   6 x f32   bounding box min xyz, max xyz
//!   nx*ny*nz x f32   values in C order, index = (ix*ny + iy)*nz + iz
//!
//! Grid nodes span the bounding box inclusively; queries are clamped to the
//! box, so the field extends continuously by its boundary values.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{GscError, Result};
use crate::math::Vec3;

#[derive(Debug, Clone)]
pub struct TargetDensityField {
    pub resolution: [usize; 3],
    pub bbox_min: Vec3,
    pub bbox_max: Vec3,
    values: Vec<f32>,
}

impl TargetDensityField {
    pub fn new(resolution: [usize; 3], bbox_min: Vec3, bbox_max: Vec3, values: Vec<f32>) -> Result<Self> {
        let [nx, ny, nz] = resolution;
        if nx < 2 || ny < 2 || nz < 2 {
            return Err(GscError::invalid_parameter(
                "resolution",
                "each axis needs at least 2 nodes",
            ));
        }
        if values.len() != nx * ny * nz {
            return Err(GscError::InvalidInput(format!(
                "grid expects {} values, got {}",
                nx * ny * nz,
                values.len()
            )));
        }
        for axis in 0..3 {
            if !(bbox_max[axis] > bbox_min[axis]) {
                return Err(GscError::invalid_parameter(
                    "bbox",
                    "max must exceed min on every axis",
                ));
            }
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(GscError::InvalidInput(
                "grid values must be finite and non-negative".into(),
            ));
        }
        Ok(TargetDensityField { resolution, bbox_min, bbox_max, values })
    }

    /// Builds a grid by evaluating `f` at every node.
    pub fn from_function<F: Fn(&Vec3) -> f64>(
        resolution: [usize; 3],
        bbox_min: Vec3,
        bbox_max: Vec3,
        f: F,
    ) -> Result<Self> {
        let [nx, ny, nz] = resolution;
        let mut values = Vec::with_capacity(nx * ny * nz);
        for ix in 0..nx {
            for iy in 0..ny {
                for iz in 0..nz {
                    let p = Vec3::new(
                        lerp(bbox_min.x, bbox_max.x, ix as f64 / (nx - 1) as f64),
                        lerp(bbox_min.y, bbox_max.y, iy as f64 / (ny - 1) as f64),
                        lerp(bbox_min.z, bbox_max.z, iz as f64 / (nz - 1) as f64),
                    );
                    values.push(f(&p) as f32);
                }
            }
        }
        TargetDensityField::new(resolution, bbox_min, bbox_max, values)
    }

    #[inline]
    fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.resolution[1] + iy) * self.resolution[2] + iz
    }

    /// Trilinear interpolation; queries outside the box clamp to it.
    pub fn density_at(&self, p: &Vec3) -> f64 {
        let mut idx = [0usize; 3];
        let mut frac = [0f64; 3];
        for axis in 0..3 {
            let n = self.resolution[axis];
            let u = (p[axis] - self.bbox_min[axis]) / (self.bbox_max[axis] - self.bbox_min[axis]);
            let x = (u * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
            let i = (x.floor() as usize).min(n - 2);
            idx[axis] = i;
            frac[axis] = x - i as f64;
        }
        let [ix, iy, iz] = idx;
        let [fx, fy, fz] = frac;
        let v = |dx: usize, dy: usize, dz: usize| -> f64 {
            self.values[self.index(ix + dx, iy + dy, iz + dz)] as f64
        };
        let c00 = lerp(v(0, 0, 0), v(1, 0, 0), fx);
        let c10 = lerp(v(0, 1, 0), v(1, 1, 0), fx);
        let c01 = lerp(v(0, 0, 1), v(1, 0, 1), fx);
        let c11 = lerp(v(0, 1, 1), v(1, 1, 1), fx);
        let c0 = lerp(c00, c10, fy);
        let c1 = lerp(c01, c11, fy);
        lerp(c0, c1, fz)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|a| p[a] >= self.bbox_min[a] && p[a] <= self.bbox_max[a])
    }

    pub fn clamp_to_box(&self, p: &Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.bbox_min.x, self.bbox_max.x),
            p.y.clamp(self.bbox_min.y, self.bbox_max.y),
            p.z.clamp(self.bbox_min.z, self.bbox_max.z),
        )
    }

    /// Mean of the squared node values, the scale reference for fit quality.
    pub fn mean_squared_density(&self) -> f64 {
        let n = self.values.len() as f64;
        self.values.iter().map(|v| (*v as f64) * (*v as f64)).sum::<f64>() / n
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        for n in self.resolution {
            w.write_all(&(n as u32).to_le_bytes())?;
        }
        for v in [self.bbox_min, self.bbox_max] {
            for c in v.iter() {
                w.write_all(&(*c as f32).to_le_bytes())?;
            }
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut u32buf = [0u8; 4];
        let mut resolution = [0usize; 3];
        for slot in &mut resolution {
            r.read_exact(&mut u32buf)?;
            *slot = u32::from_le_bytes(u32buf) as usize;
        }
        let mut floats = [0f32; 6];
        for slot in &mut floats {
            r.read_exact(&mut u32buf)?;
            *slot = f32::from_le_bytes(u32buf);
        }
        let count = resolution[0] * resolution[1] * resolution[2];
        let mut values = vec![0f32; count];
        let mut bytes = vec![0u8; count * 4];
        r.read_exact(&mut bytes)?;
        for (i, chunk) in bytes.chunks_exact(4).enumerate() {
            values[i] = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        }
        TargetDensityField::new(
            resolution,
            Vec3::new(floats[0] as f64, floats[1] as f64, floats[2] as f64),
            Vec3::new(floats[3] as f64, floats[4] as f64, floats[5] as f64),
            values,
        )
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(TargetDensityField::new([1, 2, 2], Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0), vec![0.0; 4]).is_err());
        assert!(TargetDensityField::new([2, 2, 2], Vec3::zeros(), Vec3::zeros(), vec![0.0; 8]).is_err());
        assert!(TargetDensityField::new([2, 2, 2], Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0), vec![-1.0; 8]).is_err());
        assert!(TargetDensityField::new([2, 2, 2], Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0), vec![0.0; 7]).is_err());
    }

    #[test]
    fn trilinear_reproduces_linear_functions() {
        // A trilinear interpolant is exact for f(x,y,z) = 1 + 2x + 3y - z.
        let f = |p: &Vec3| 1.0 + 2.0 * p.x + 3.0 * p.y - p.z + 10.0;
        let field = TargetDensityField::from_function(
            [5, 4, 6],
            Vec3::new(-1.0, 0.0, -2.0),
            Vec3::new(1.0, 2.0, 0.0),
            f,
        )
        .unwrap();
        let mut rng = crate::oracle::rng(3);
        use rand::Rng;
        for _ in 0..50 {
            let p = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(-2.0..0.0),
            );
            assert!((field.density_at(&p) - f(&p)).abs() < 1e-5);
        }
    }

    #[test]
    fn queries_clamp_to_box() {
        let field = TargetDensityField::from_function(
            [3, 3, 3],
            Vec3::zeros(),
            Vec3::new(1.0, 1.0, 1.0),
            |p| p.x + 1.0,
        )
        .unwrap();
        let inside = field.density_at(&Vec3::new(1.0, 0.5, 0.5));
        let outside = field.density_at(&Vec3::new(5.0, 0.5, 0.5));
        assert!((inside - outside).abs() < 1e-12);
    }

    #[test]
    fn file_round_trip() {
        let field = TargetDensityField::from_function(
            [4, 5, 3],
            Vec3::new(-0.5, -0.5, 0.0),
            Vec3::new(0.5, 0.5, 1.0),
            |p| (1.0 - p.norm()).max(0.0),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.grid");
        field.save(&path).unwrap();
        let back = TargetDensityField::load(&path).unwrap();
        assert_eq!(back.resolution, field.resolution);
        assert_eq!(back.values, field.values);
        assert!((back.bbox_min - field.bbox_min).norm() < 1e-6);
        assert!((back.bbox_max - field.bbox_max).norm() < 1e-6);
    }
}
