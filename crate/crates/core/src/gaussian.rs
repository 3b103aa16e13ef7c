//! Anisotropic 3D Gaussians and closed-form ray integration.
//!
//! A Gaussian has density `C * exp(-0.5 (mu - x)^T P (mu - x))` with
//! precision matrix `P = R^T D R`, `D = diag(1/sx^2, 1/sy^2, 1/sz^2)` and `R`
//! the rotation orthonormalized from a 6-value representation (the first two
//! rows of the rotation matrix). Restricting the density to a unit-direction
//! ray `x = o + t*d` yields a 1D Gaussian in `t`:
//!
//! ```text
//! mu_1d    = d^T P (mu - o) / (d^T P d)
//! sigma_1d = (d^T P d)^(-1/2)
//! amp_1d   = C * exp(-0.5 * w^T P w),   w = (mu - o) - mu_1d * d
//! ```
//!
//! so the optical depth over any segment is an `erf` difference and the
//! transmittance `exp(-depth)` needs no sampling. `w` is the residual of
//! `mu - o` perpendicular to the ray in the Mahalanobis metric; using it
//! avoids the cancellation in the equivalent form
//! `(mu-o)^T P (mu-o) - mu_1d^2 / sigma_1d^2` when a ray passes close to the
//! mean.

use crate::error::{GscError, Result};
use crate::math::{Mat3, Ray, Vec3};

/// `sqrt(2*pi)`, the mass of a unit 1D Gaussian.
pub const SQRT_TWO_PI: f64 = 2.5066282746310002;

/// 1D peaks below this are skipped before any `erf` call. A culled Gaussian
/// contributes at most `1e-12 * sigma_1d * sqrt(2*pi)` of optical depth, so
/// transmittance moves by well under 1e-11 for meter-scale bodies.
pub const AMP_CULL_THRESHOLD: f64 = 1e-12;

/// Two rotation rows closer to parallel than this (sine of the angle between
/// them) cannot be orthonormalized reliably.
pub const ROT6_PARALLEL_THRESHOLD: f64 = 1e-6;

/// Orthonormalizes a 6-value rotation (two stored rows) into a full proper
/// rotation matrix: Gram-Schmidt on the rows, third row by cross product.
pub fn rotation_from_rot6(rot6: &[f64; 6]) -> Result<Mat3> {
    if !rot6.iter().all(|c| c.is_finite()) {
        return Err(GscError::invalid_parameter("rot6", "non-finite component"));
    }
    let a = Vec3::new(rot6[0], rot6[1], rot6[2]);
    let b = Vec3::new(rot6[3], rot6[4], rot6[5]);
    let a_norm = a.norm();
    let b_norm = b.norm();
    if a_norm < 1e-12 || b_norm < 1e-12 {
        return Err(GscError::invalid_parameter("rot6", "zero-length row"));
    }
    let r0 = a / a_norm;
    let b_perp = b - r0 * b.dot(&r0);
    if b_perp.norm() < ROT6_PARALLEL_THRESHOLD * b_norm {
        return Err(GscError::invalid_parameter("rot6", "rows are near parallel"));
    }
    let r1 = b_perp.normalize();
    let r2 = r0.cross(&r1);
    Ok(Mat3::from_rows(&[
        r0.transpose(),
        r1.transpose(),
        r2.transpose(),
    ]))
}

/// The identity rotation in 6-value form.
pub const ROT6_IDENTITY: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];

/// Extracts the 6-value representation (first two rows) of a rotation matrix.
pub fn rot6_from_rotation(r: &Mat3) -> [f64; 6] {
    [
        r[(0, 0)],
        r[(0, 1)],
        r[(0, 2)],
        r[(1, 0)],
        r[(1, 1)],
        r[(1, 2)],
    ]
}

/// One anisotropic 3D Gaussian: 13 parameters total (3 mean, 3 sigma,
/// 6 rotation, 1 density amplitude).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisoGaussian {
    pub mean: Vec3,
    /// Per-axis standard deviations, all positive.
    pub sigma: Vec3,
    /// First two rows of the rotation that maps world offsets into the
    /// Gaussian's local axes.
    pub rot6: [f64; 6],
    /// Peak density, >= 0.
    pub amplitude: f64,
}

impl AnisoGaussian {
    pub fn new(mean: Vec3, sigma: Vec3, rot6: [f64; 6], amplitude: f64) -> Result<Self> {
        if !mean.iter().all(|c| c.is_finite()) {
            return Err(GscError::invalid_parameter("mean", "non-finite component"));
        }
        if !sigma.iter().all(|c| c.is_finite() && *c > 0.0) {
            return Err(GscError::invalid_parameter("sigma", "components must be finite and > 0"));
        }
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(GscError::invalid_parameter("amplitude", "must be finite and >= 0"));
        }
        rotation_from_rot6(&rot6)?;
        Ok(AnisoGaussian {
            mean,
            sigma,
            rot6,
            amplitude,
        })
    }

    /// Axis-aligned Gaussian with identity rotation.
    pub fn axis_aligned(mean: Vec3, sigma: Vec3, amplitude: f64) -> Result<Self> {
        AnisoGaussian::new(mean, sigma, ROT6_IDENTITY, amplitude)
    }

    /// Isotropic Gaussian.
    pub fn isotropic(mean: Vec3, sigma: f64, amplitude: f64) -> Result<Self> {
        AnisoGaussian::axis_aligned(mean, Vec3::new(sigma, sigma, sigma), amplitude)
    }

    /// The precision matrix `R^T D R`. Re-validates the parameters so it is
    /// safe to call on hand-edited values.
    pub fn precision_matrix(&self) -> Result<PrecisionMatrix> {
        if !self.sigma.iter().all(|c| c.is_finite() && *c > 0.0) {
            return Err(GscError::invalid_parameter("sigma", "components must be finite and > 0"));
        }
        let r = rotation_from_rot6(&self.rot6)?;
        let d = Mat3::from_diagonal(&Vec3::new(
            1.0 / (self.sigma.x * self.sigma.x),
            1.0 / (self.sigma.y * self.sigma.y),
            1.0 / (self.sigma.z * self.sigma.z),
        ));
        Ok(PrecisionMatrix(r.transpose() * d * r))
    }

    /// Density at a world-space point.
    pub fn density_at(&self, x: &Vec3) -> f64 {
        PreparedGaussian::new(self).density_at(x)
    }

    /// Reduces this Gaussian along a ray to its induced 1D Gaussian.
    pub fn reduce_to_1d(&self, ray: &Ray) -> RayGaussian1D {
        PreparedGaussian::new(self).reduce_to_1d(ray)
    }

    /// `C * sx * sy * sz * (2*pi)^(3/2)`, the total integral of the density.
    /// Invariant under any rigid transform of the Gaussian.
    pub fn mass(&self) -> f64 {
        self.amplitude * self.sigma.x * self.sigma.y * self.sigma.z * SQRT_TWO_PI.powi(3)
    }
}

/// Symmetric positive-definite inverse covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionMatrix(pub Mat3);

impl PrecisionMatrix {
    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// `v^T P v`.
    pub fn quadratic_form(&self, v: &Vec3) -> f64 {
        v.dot(&(self.0 * v))
    }

    /// Largest symmetry violation, for invariant checks.
    pub fn asymmetry(&self) -> f64 {
        (self.0 - self.0.transpose()).abs().max()
    }

    /// True when all eigenvalues are positive.
    pub fn is_positive_definite(&self) -> bool {
        self.0.symmetric_eigenvalues().iter().all(|l| *l > 0.0)
    }
}

/// The 1D Gaussian a ray induces in its parameter `t`: peak `amp` at `mu`
/// with standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayGaussian1D {
    pub amp: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl RayGaussian1D {
    pub fn eval(&self, t: f64) -> f64 {
        let z = (t - self.mu) / self.sigma;
        self.amp * (-0.5 * z * z).exp()
    }

    /// Closed-form integral over `[t0, t1]` via the error function. Either
    /// bound may be infinite.
    pub fn segment_integral(&self, t0: f64, t1: f64) -> Result<f64> {
        if t0 > t1 {
            return Err(GscError::InvalidInterval { t0, t1 });
        }
        Ok(self.segment_integral_unchecked(t0, t1))
    }

    #[inline]
    fn segment_integral_unchecked(&self, t0: f64, t1: f64) -> f64 {
        let inv = 1.0 / (self.sigma * std::f64::consts::SQRT_2);
        let cdf_span = 0.5 * (libm::erf((t1 - self.mu) * inv) - libm::erf((t0 - self.mu) * inv));
        (self.amp * self.sigma * SQRT_TWO_PI * cdf_span).max(0.0)
    }
}

/// An [`AnisoGaussian`] with its precision matrix expanded, for ray-casting
/// loops that touch each Gaussian many times.
#[derive(Debug, Clone, Copy)]
pub struct PreparedGaussian {
    pub mean: Vec3,
    pub amplitude: f64,
    pub precision: Mat3,
    /// Largest per-axis sigma, used for conservative support bounds.
    pub sigma_max: f64,
}

impl PreparedGaussian {
    /// Expands a valid Gaussian. The rotation rows were validated at
    /// construction, so the orthonormalization here cannot fail.
    pub fn new(g: &AnisoGaussian) -> Self {
        let precision = g
            .precision_matrix()
            .expect("AnisoGaussian invariants enforced at construction")
            .0;
        PreparedGaussian {
            mean: g.mean,
            amplitude: g.amplitude,
            precision,
            sigma_max: g.sigma.max(),
        }
    }

    pub fn prepare_all(gaussians: &[AnisoGaussian]) -> Vec<PreparedGaussian> {
        gaussians.iter().map(PreparedGaussian::new).collect()
    }

    #[inline]
    pub fn density_at(&self, x: &Vec3) -> f64 {
        let d = self.mean - x;
        let q = d.dot(&(self.precision * d));
        self.amplitude * (-0.5 * q).exp()
    }

    #[inline]
    pub fn reduce_to_1d(&self, ray: &Ray) -> RayGaussian1D {
        let v = self.mean - ray.origin;
        let pd = self.precision * ray.direction;
        let dpd = ray.direction.dot(&pd);
        let mu = v.dot(&pd) / dpd;
        let sigma = dpd.sqrt().recip();
        // Perpendicular residual in the Mahalanobis metric; its quadratic
        // form is the exponent of the 1D peak.
        let w = v - ray.direction * mu;
        let q_perp = w.dot(&(self.precision * w));
        RayGaussian1D {
            amp: self.amplitude * (-0.5 * q_perp).exp(),
            mu,
            sigma,
        }
    }
}

/// Optical depth of a ray through a set of Gaussians (the negative log of
/// the transmittance).
pub fn optical_depth_prepared(gaussians: &[PreparedGaussian], ray: &Ray) -> f64 {
    let mut depth = 0.0;
    for g in gaussians {
        let g1d = g.reduce_to_1d(ray);
        if g1d.amp < AMP_CULL_THRESHOLD {
            continue;
        }
        depth += g1d.segment_integral_unchecked(ray.t_min, ray.t_max);
    }
    depth
}

/// Transmittance `exp(-sum of segment integrals)` in `(0, 1]`, used directly
/// as the shadow value.
pub fn transmittance_prepared(gaussians: &[PreparedGaussian], ray: &Ray) -> f64 {
    (-optical_depth_prepared(gaussians, ray)).exp()
}

/// Convenience wrapper that validates and expands the Gaussians first.
pub fn transmittance(gaussians: &[AnisoGaussian], ray: &Ray) -> f64 {
    transmittance_prepared(&PreparedGaussian::prepare_all(gaussians), ray)
}
