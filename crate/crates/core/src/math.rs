//! Small linear-algebra vocabulary used across the crate.
//!
//! All geometry is double precision in scene units (meters). The world frame
//! is right-handed with +z up.

use crate::error::{GscError, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Mat4 = nalgebra::Matrix4<f64>;

/// A half-open ray segment `origin + t * direction`, `t in [t_min, t_max)`.
///
/// The direction is normalized at construction; every closed-form integral in
/// this crate assumes a unit direction (a non-unit direction would rescale the
/// reduced 1D sigma, which we deliberately do not support).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    /// Builds a ray, normalizing `direction`. `t_max` may be `f64::INFINITY`.
    pub fn new(origin: Vec3, direction: Vec3, t_min: f64, t_max: f64) -> Result<Self> {
        if !origin.iter().all(|c| c.is_finite()) {
            return Err(GscError::invalid_parameter("ray.origin", "non-finite component"));
        }
        if !direction.iter().all(|c| c.is_finite()) {
            return Err(GscError::invalid_parameter("ray.direction", "non-finite component"));
        }
        let norm = direction.norm();
        if norm < 1e-12 {
            return Err(GscError::invalid_parameter("ray.direction", "zero length"));
        }
        if !(t_min >= 0.0) {
            return Err(GscError::invalid_parameter("ray.t_min", "must be >= 0"));
        }
        if !(t_max > t_min) {
            return Err(GscError::invalid_parameter("ray.t_max", "must exceed t_min"));
        }
        Ok(Ray {
            origin,
            direction: direction / norm,
            t_min,
            t_max,
        })
    }

    /// Full line from the origin: `t in [0, inf)`.
    pub fn infinite(origin: Vec3, direction: Vec3) -> Result<Self> {
        Ray::new(origin, direction, 0.0, f64::INFINITY)
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// Splits a 4x4 local-to-world transform into its rotation block and
/// translation column. The bottom row is not inspected.
pub fn rotation_translation(m: &Mat4) -> (Mat3, Vec3) {
    let r = m.fixed_view::<3, 3>(0, 0).into_owned();
    let t = Vec3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]);
    (r, t)
}

/// Frobenius distance of `r` from the nearest rotation matrix.
pub fn orthonormality_error(r: &Mat3) -> f64 {
    let gram = r.transpose() * r;
    (gram - Mat3::identity()).norm()
}

/// Projects `r` onto the closest proper rotation (polar factor via SVD).
pub fn nearest_rotation(r: &Mat3) -> Mat3 {
    let svd = r.svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let mut rot = u * v_t;
    if rot.determinant() < 0.0 {
        // Flip the axis of least significance to stay in SO(3).
        let mut u = u;
        u.column_mut(2).neg_mut();
        rot = u * v_t;
    }
    rot
}

/// Inverts a rigid transform (orthonormal rotation block assumed).
pub fn invert_rigid(m: &Mat4) -> Mat4 {
    let (r, t) = rotation_translation(m);
    let r_inv = r.transpose();
    let t_inv = -(r_inv * t);
    compose_rigid(&r_inv, &t_inv)
}

/// Assembles a 4x4 from a rotation block and translation.
pub fn compose_rigid(r: &Mat3, t: &Vec3) -> Mat4 {
    let mut m = Mat4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    m[(0, 3)] = t.x;
    m[(1, 3)] = t.y;
    m[(2, 3)] = t.z;
    m
}

/// Applies a 4x4 to a point (affine, w = 1).
pub fn transform_point(m: &Mat4, p: &Vec3) -> Vec3 {
    let (r, t) = rotation_translation(m);
    r * p + t
}

/// Unit direction from azimuth/elevation in radians. Azimuth rotates about
/// +z starting at +x; elevation is measured from the horizontal plane.
pub fn direction_from_angles(azimuth: f64, elevation: f64) -> Vec3 {
    let (sa, ca) = azimuth.sin_cos();
    let (se, ce) = elevation.sin_cos();
    Vec3::new(ce * ca, ce * sa, se)
}

/// Inverse of [`direction_from_angles`]; returns (azimuth, elevation).
pub fn angles_from_direction(d: &Vec3) -> (f64, f64) {
    let elevation = d.z.clamp(-1.0, 1.0).asin();
    let azimuth = d.y.atan2(d.x);
    (azimuth, elevation)
}

/// Angle between two directions in degrees.
pub fn angle_between_degrees(a: &Vec3, b: &Vec3) -> f64 {
    let d = (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0);
    d.acos().to_degrees()
}
