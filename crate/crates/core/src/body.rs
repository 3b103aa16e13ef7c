//! Articulated Gaussian body: J joints with K local Gaussians each, posed
//! into world space by per-joint 4x4 local-to-world transforms.

use crate::error::{GscError, Result};
use crate::gaussian::{rot6_from_rotation, rotation_from_rot6, AnisoGaussian};
use crate::math::{
    invert_rigid, nearest_rotation, orthonormality_error, rotation_translation, transform_point,
    Mat4, Vec3,
};

pub const MAX_JOINTS: usize = 256;

/// Number of parameters per Gaussian (3 mean + 3 sigma + 6 rotation +
/// 1 amplitude).
pub const PARAMS_PER_GAUSSIAN: usize = 13;

/// Joint hierarchy with rest-pose joint centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    /// Parent index per joint; -1 marks the root.
    pub parent: Vec<i32>,
    /// Rest-pose joint centers in world space. Bone centers for the mean
    /// regularizer derive from these via [`Skeleton::bone_centers`].
    pub rest_centers: Vec<Vec3>,
}

impl Skeleton {
    pub fn new(parent: Vec<i32>, rest_centers: Vec<Vec3>) -> Result<Self> {
        let j = parent.len();
        if j == 0 || j > MAX_JOINTS {
            return Err(GscError::invalid_parameter(
                "skeleton.parent",
                format!("joint count must be in 1..={MAX_JOINTS}, got {j}"),
            ));
        }
        if rest_centers.len() != j {
            return Err(GscError::InvalidInput(format!(
                "skeleton has {j} joints but {} rest centers",
                rest_centers.len()
            )));
        }
        let roots = parent.iter().filter(|p| **p == -1).count();
        if roots != 1 {
            return Err(GscError::invalid_parameter(
                "skeleton.parent",
                format!("expected exactly one root (-1), found {roots}"),
            ));
        }
        for (i, &p) in parent.iter().enumerate() {
            if p != -1 && (p < 0 || p as usize >= j) {
                return Err(GscError::invalid_parameter(
                    "skeleton.parent",
                    format!("joint {i} has out-of-range parent {p}"),
                ));
            }
            // Walking up must reach the root without cycling.
            let mut cursor = p;
            let mut hops = 0;
            while cursor != -1 {
                cursor = parent[cursor as usize];
                hops += 1;
                if hops > j {
                    return Err(GscError::invalid_parameter(
                        "skeleton.parent",
                        format!("cycle detected through joint {i}"),
                    ));
                }
            }
        }
        Ok(Skeleton { parent, rest_centers })
    }

    pub fn joint_count(&self) -> usize {
        self.parent.len()
    }

    /// First child (lowest index) of a joint, if any.
    pub fn first_child(&self, joint: usize) -> Option<usize> {
        self.parent.iter().position(|&p| p == joint as i32)
    }

    /// Bone center per joint: the rest joint center midpointed with its
    /// first child; leaf joints use the joint center itself.
    pub fn bone_centers(&self) -> Vec<Vec3> {
        (0..self.joint_count())
            .map(|j| match self.first_child(j) {
                Some(c) => (self.rest_centers[j] + self.rest_centers[c]) * 0.5,
                None => self.rest_centers[j],
            })
            .collect()
    }
}

/// Per-joint local-to-world transforms for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    pub transforms: Vec<Mat4>,
    pub timestamp: usize,
}

impl PoseFrame {
    /// Validates and, where estimation noise has crept in, re-orthonormalizes
    /// each rotation block. Corrections above 1e-3 Frobenius are logged.
    pub fn new(transforms: Vec<Mat4>, timestamp: usize) -> Result<Self> {
        let mut cleaned = Vec::with_capacity(transforms.len());
        for (j, m) in transforms.into_iter().enumerate() {
            if !m.iter().all(|c| c.is_finite()) {
                return Err(GscError::invalid_parameter(
                    "pose.transforms",
                    format!("joint {j} has a non-finite entry"),
                ));
            }
            let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
            if bottom != [0.0, 0.0, 0.0, 1.0] {
                return Err(GscError::invalid_parameter(
                    "pose.transforms",
                    format!("joint {j} bottom row must be (0,0,0,1)"),
                ));
            }
            let (r, t) = rotation_translation(&m);
            let err = orthonormality_error(&r);
            if err > 1e-6 {
                let fixed = nearest_rotation(&r);
                let correction = (fixed - r).norm();
                if correction > 1e-3 {
                    log::warn!(
                        "pose frame {timestamp}, joint {j}: rotation re-orthonormalized \
                         (correction {correction:.2e})"
                    );
                }
                cleaned.push(crate::math::compose_rigid(&fixed, &t));
            } else {
                cleaned.push(m);
            }
        }
        Ok(PoseFrame { transforms: cleaned, timestamp })
    }

    /// Identity pose for `j` joints.
    pub fn identity(j: usize, timestamp: usize) -> Self {
        PoseFrame {
            transforms: vec![Mat4::identity(); j],
            timestamp,
        }
    }

    pub fn joint_count(&self) -> usize {
        self.transforms.len()
    }
}

/// J x K Gaussians in joint-local coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBody {
    /// `gaussians[j][k]` is Gaussian k of joint j, in joint-local frame.
    pub gaussians: Vec<Vec<AnisoGaussian>>,
}

impl GaussianBody {
    pub fn new(gaussians: Vec<Vec<AnisoGaussian>>) -> Result<Self> {
        if gaussians.is_empty() {
            return Err(GscError::InvalidInput("body has no joints".into()));
        }
        let k = gaussians[0].len();
        if k == 0 {
            return Err(GscError::InvalidInput("body has no Gaussians per joint".into()));
        }
        if gaussians.iter().any(|row| row.len() != k) {
            return Err(GscError::InvalidInput(
                "all joints must carry the same number of Gaussians".into(),
            ));
        }
        Ok(GaussianBody { gaussians })
    }

    pub fn joint_count(&self) -> usize {
        self.gaussians.len()
    }

    /// Gaussians per joint.
    pub fn k(&self) -> usize {
        self.gaussians[0].len()
    }

    pub fn gaussian_count(&self) -> usize {
        self.joint_count() * self.k()
    }

    /// Flattens the body into a J*K*13 parameter vector (mean, sigma, rot6,
    /// amplitude per Gaussian, joints outermost).
    pub fn pack_parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.gaussian_count() * PARAMS_PER_GAUSSIAN);
        for row in &self.gaussians {
            for g in row {
                out.extend_from_slice(&[g.mean.x, g.mean.y, g.mean.z]);
                out.extend_from_slice(&[g.sigma.x, g.sigma.y, g.sigma.z]);
                out.extend_from_slice(&g.rot6);
                out.push(g.amplitude);
            }
        }
        out
    }

    /// Inverse of [`GaussianBody::pack_parameters`]; re-validates every
    /// Gaussian, so corrupt vectors (negative sigma, degenerate rotations)
    /// are rejected here.
    pub fn unpack_parameters(params: &[f64], j: usize, k: usize) -> Result<Self> {
        let expected = j * k * PARAMS_PER_GAUSSIAN;
        if params.len() != expected {
            return Err(GscError::InvalidInput(format!(
                "parameter vector has length {}, expected {expected} (J={j}, K={k})",
                params.len()
            )));
        }
        let mut gaussians = Vec::with_capacity(j);
        for jj in 0..j {
            let mut row = Vec::with_capacity(k);
            for kk in 0..k {
                let o = (jj * k + kk) * PARAMS_PER_GAUSSIAN;
                let p = &params[o..o + PARAMS_PER_GAUSSIAN];
                row.push(AnisoGaussian::new(
                    Vec3::new(p[0], p[1], p[2]),
                    Vec3::new(p[3], p[4], p[5]),
                    [p[6], p[7], p[8], p[9], p[10], p[11]],
                    p[12],
                )?);
            }
            gaussians.push(row);
        }
        GaussianBody::new(gaussians)
    }
}

/// Rigidly transforms one Gaussian by a local-to-world matrix: the mean maps
/// affinely, the local rotation composes with the joint rotation, sigma and
/// amplitude are untouched.
pub fn pose_gaussian(g: &AnisoGaussian, local_to_world: &Mat4) -> AnisoGaussian {
    let (q, t) = rotation_translation(local_to_world);
    let r_local = rotation_from_rot6(&g.rot6).expect("validated at construction");
    // World offsets map to local as R * Q^T, so the posed row pair is R Q^T.
    let r_world = r_local * q.transpose();
    AnisoGaussian {
        mean: q * g.mean + t,
        sigma: g.sigma,
        rot6: rot6_from_rotation(&r_world),
        amplitude: g.amplitude,
    }
}

/// Poses every body Gaussian into world space for one frame.
pub fn pose_gaussians(
    body: &GaussianBody,
    skeleton: &Skeleton,
    pose: &PoseFrame,
) -> Result<Vec<AnisoGaussian>> {
    check_dimensions(body, skeleton, pose)?;
    let mut out = Vec::with_capacity(body.gaussian_count());
    for (j, row) in body.gaussians.iter().enumerate() {
        let m = &pose.transforms[j];
        for g in row {
            out.push(pose_gaussian(g, m));
        }
    }
    Ok(out)
}

/// World-space body density at `x`: each joint's Gaussians are evaluated in
/// their local frame at the pulled-back point.
pub fn body_density(
    body: &GaussianBody,
    skeleton: &Skeleton,
    pose: &PoseFrame,
    x: &Vec3,
) -> Result<f64> {
    check_dimensions(body, skeleton, pose)?;
    let mut sum = 0.0;
    for (j, row) in body.gaussians.iter().enumerate() {
        let inv = invert_rigid(&pose.transforms[j]);
        let local = transform_point(&inv, x);
        for g in row {
            sum += g.density_at(&local);
        }
    }
    Ok(sum)
}

fn check_dimensions(body: &GaussianBody, skeleton: &Skeleton, pose: &PoseFrame) -> Result<()> {
    if body.joint_count() != skeleton.joint_count() || pose.joint_count() != skeleton.joint_count()
    {
        return Err(GscError::InvalidInput(format!(
            "joint count mismatch: body {}, skeleton {}, pose {}",
            body.joint_count(),
            skeleton.joint_count(),
            pose.joint_count()
        )));
    }
    Ok(())
}
