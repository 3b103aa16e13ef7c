//! Pinhole camera: OpenCV-style axes (x right, y down, z forward), pixel
//! (0, 0) at the top-left, rays through pixel centers.

use crate::error::{GscError, Result};
use crate::math::{
    compose_rigid, invert_rigid, nearest_rotation, orthonormality_error, rotation_translation,
    Mat4, Ray, Vec3,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub world_to_camera: Mat4,
}

impl Camera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        world_to_camera: Mat4,
    ) -> Result<Self> {
        if !(fx > 0.0) || !(fy > 0.0) {
            return Err(GscError::invalid_parameter("camera.f", "focal lengths must be > 0"));
        }
        if width == 0 || height == 0 {
            return Err(GscError::invalid_parameter("camera.size", "image must be at least 1x1"));
        }
        let (r, t) = rotation_translation(&world_to_camera);
        let world_to_camera = if orthonormality_error(&r) > 1e-6 {
            compose_rigid(&nearest_rotation(&r), &t)
        } else {
            world_to_camera
        };
        Ok(Camera { fx, fy, cx, cy, width, height, world_to_camera })
    }

    /// Simple symmetric camera: focal length in pixels, principal point at
    /// the image center.
    pub fn centered(focal: f64, width: usize, height: usize, world_to_camera: Mat4) -> Result<Self> {
        Camera::new(
            focal,
            focal,
            width as f64 * 0.5,
            height as f64 * 0.5,
            width,
            height,
            world_to_camera,
        )
    }

    pub fn camera_to_world(&self) -> Mat4 {
        invert_rigid(&self.world_to_camera)
    }

    /// Camera center in world coordinates.
    pub fn position(&self) -> Vec3 {
        let (r, t) = rotation_translation(&self.world_to_camera);
        -(r.transpose() * t)
    }

    /// World-space unit ray through the center of pixel (x, y). The ray
    /// parameter is Euclidean distance from the camera center, which is the
    /// depth convention of every buffer in this crate.
    pub fn pixel_ray(&self, x: usize, y: usize) -> Ray {
        let dir_cam = Vec3::new(
            (x as f64 + 0.5 - self.cx) / self.fx,
            (y as f64 + 0.5 - self.cy) / self.fy,
            1.0,
        );
        let (r, _) = rotation_translation(&self.world_to_camera);
        let dir_world = r.transpose() * dir_cam;
        Ray::infinite(self.position(), dir_world).expect("pinhole directions are non-zero")
    }

    /// World point for a pixel at the given ray depth.
    pub fn unproject(&self, x: usize, y: usize, depth: f64) -> Vec3 {
        self.pixel_ray(x, y).at(depth)
    }

    /// Builds a world-to-camera transform looking from `eye` toward
    /// `target`, with `up` fixing the roll (world +z in this crate).
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3) -> Result<Mat4> {
        let forward = target - eye;
        if forward.norm() < 1e-12 {
            return Err(GscError::invalid_parameter("look_at", "eye equals target"));
        }
        let z = forward.normalize();
        let x = z.cross(&up);
        if x.norm() < 1e-9 {
            return Err(GscError::invalid_parameter("look_at", "view direction parallel to up"));
        }
        let x = x.normalize();
        let y = z.cross(&x);
        let r = crate::math::Mat3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        Ok(compose_rigid(&r, &(-(r * eye))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_pixel_ray_points_forward() {
        let m = Camera::look_at(Vec3::new(0.0, -3.0, 1.0), Vec3::new(0.0, 0.0, 1.0), Vec3::z())
            .unwrap();
        let cam = Camera::centered(100.0, 64, 64, m).unwrap();
        let ray = cam.pixel_ray(31, 31);
        // Looking along +y from (0,-3,1).
        assert!((ray.origin - Vec3::new(0.0, -3.0, 1.0)).norm() < 1e-9);
        assert!(ray.direction.y > 0.99);
    }

    #[test]
    fn unproject_inverts_depth() {
        let m = Camera::look_at(Vec3::new(2.0, -1.0, 1.5), Vec3::new(0.0, 0.5, 0.9), Vec3::z())
            .unwrap();
        let cam = Camera::centered(80.0, 32, 24, m).unwrap();
        let ray = cam.pixel_ray(10, 7);
        let p = ray.at(2.5);
        let q = cam.unproject(10, 7, 2.5);
        assert!((p - q).norm() < 1e-12);
        // Pixel rays are unit length, so the parameter is metric distance.
        assert!(((p - cam.position()).norm() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_intrinsics() {
        assert!(Camera::new(0.0, 1.0, 0.0, 0.0, 4, 4, Mat4::identity()).is_err());
        assert!(Camera::new(10.0, 10.0, 2.0, 2.0, 0, 4, Mat4::identity()).is_err());
    }
}
