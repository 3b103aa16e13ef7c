//! Independent brute-force references used by tests and the benchmark:
//! quadrature transmittance, stratified sampled shadows, finite-difference
//! gradients, and seeded random scene ingredients.
//!
//! Nothing here touches the closed-form ray reduction; the integrands come
//! straight from the 3D density evaluation, so these paths stay valid as
//! cross-checks of the analytic formulas.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::error::{GscError, Result};
use crate::gaussian::{AnisoGaussian, PreparedGaussian};
use crate::math::{compose_rigid, Mat4, Ray, Vec3};

/// Support bound for infinite rays: the integration window is the union of
/// Euclidean projections of the means onto the ray, widened by this many
/// `sigma_max` per Gaussian. 12 covers the worst-case offset between the
/// Euclidean projection and the true 1D peak (6) plus six reduced standard
/// deviations of tail; the truncated mass is below 1e-9 of any Gaussian.
pub const SUPPORT_SIGMAS: f64 = 12.0;

/// Step configuration for quadrature references.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// Number of trapezoid steps, >= 2.
    pub steps: usize,
    /// Integration bounds override. `None` takes the ray's interval, with
    /// the automatic support extension when the upper bound is infinite.
    pub bounds: Option<(f64, f64)>,
}

impl QuadratureConfig {
    pub fn with_steps(steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(GscError::invalid_parameter("steps", "must be >= 2"));
        }
        Ok(QuadratureConfig { steps, bounds: None })
    }
}

/// Finite integration window for a ray through a set of Gaussians. Falls
/// back to a unit interval when nothing intersects.
pub fn support_bounds(gaussians: &[PreparedGaussian], ray: &Ray) -> (f64, f64) {
    let mut t0 = ray.t_min;
    let mut t1 = ray.t_max;
    if t1.is_finite() {
        return (t0, t1);
    }
    let mut hi = ray.t_min;
    for g in gaussians {
        let proj = ray.direction.dot(&(g.mean - ray.origin));
        hi = hi.max(proj + SUPPORT_SIGMAS * g.sigma_max);
    }
    t1 = hi.max(t0 + 1.0);
    if t0.is_infinite() {
        t0 = 0.0;
    }
    (t0, t1)
}

/// Transmittance by trapezoidal quadrature of the summed 3D density along
/// the ray. Converges to the analytic value as `steps` grows.
pub fn quad_transmittance(
    gaussians: &[AnisoGaussian],
    ray: &Ray,
    cfg: &QuadratureConfig,
) -> f64 {
    let prepared = PreparedGaussian::prepare_all(gaussians);
    quad_transmittance_prepared(&prepared, ray, cfg)
}

pub fn quad_transmittance_prepared(
    gaussians: &[PreparedGaussian],
    ray: &Ray,
    cfg: &QuadratureConfig,
) -> f64 {
    if gaussians.is_empty() {
        return 1.0;
    }
    let (t0, t1) = cfg.bounds.unwrap_or_else(|| support_bounds(gaussians, ray));
    let n = cfg.steps;
    let h = (t1 - t0) / n as f64;
    let density = |t: f64| {
        let x = ray.at(t);
        gaussians.iter().map(|g| g.density_at(&x)).sum::<f64>()
    };
    let mut sum = 0.5 * (density(t0) + density(t1));
    for i in 1..n {
        sum += density(t0 + h * i as f64);
    }
    (-sum * h).exp()
}

/// The sampled secondary-ray shadow value a volumetric renderer computes:
/// one stratified jittered sample per bin, alpha-composited as
/// `prod_i exp(-density_i * delta)`.
pub fn nerf_style_shadow(
    gaussians: &[AnisoGaussian],
    ray: &Ray,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples < 2 {
        return Err(GscError::invalid_parameter("samples", "must be >= 2"));
    }
    let prepared = PreparedGaussian::prepare_all(gaussians);
    Ok(nerf_style_shadow_prepared(&prepared, ray, samples, &mut rng(seed)))
}

pub fn nerf_style_shadow_prepared(
    gaussians: &[PreparedGaussian],
    ray: &Ray,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    if gaussians.is_empty() {
        return 1.0;
    }
    let (t0, t1) = support_bounds(gaussians, ray);
    let delta = (t1 - t0) / samples as f64;
    let mut transmittance = 1.0;
    for i in 0..samples {
        let jitter: f64 = rng.gen();
        let t = t0 + delta * (i as f64 + jitter);
        let x = ray.at(t);
        let density: f64 = gaussians.iter().map(|g| g.density_at(&x)).sum();
        transmittance *= (-density * delta).exp();
    }
    transmittance
}

/// Central finite differences `(f(p + h e_i) - f(p - h e_i)) / (2h)`.
pub fn fd_gradient<F>(loss: F, params: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(GscError::invalid_parameter("h", "must be > 0"));
    }
    let mut probe = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        probe[i] = params[i] + h;
        let plus = loss(&probe);
        probe[i] = params[i] - h;
        let minus = loss(&probe);
        probe[i] = params[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(GscError::InvalidInput(format!(
                "non-finite probe at coordinate {i}"
            )));
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// Deterministic generator for test inputs.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random anisotropic Gaussian at desk scale: means within a couple of
/// meters, sigmas in [0.02, 0.5], arbitrary orientation, amplitude in
/// (0, 2].
pub fn random_gaussian(rng: &mut ChaCha8Rng) -> AnisoGaussian {
    let mean = Vec3::new(
        rng.gen_range(-1.5..1.5),
        rng.gen_range(-1.5..1.5),
        rng.gen_range(-1.5..1.5),
    );
    let sigma = Vec3::new(
        rng.gen_range(0.02..0.5),
        rng.gen_range(0.02..0.5),
        rng.gen_range(0.02..0.5),
    );
    let rot6 = loop {
        let candidate: [f64; 6] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        if crate::gaussian::rotation_from_rot6(&candidate).is_ok() {
            break candidate;
        }
    };
    let amplitude = rng.gen_range(0.05..2.0);
    AnisoGaussian::new(mean, sigma, rot6, amplitude).expect("sampled parameters are valid")
}

/// A random infinite ray whose origin lies outside the sampling box.
pub fn random_ray(rng: &mut ChaCha8Rng) -> Ray {
    let origin = Vec3::new(
        rng.gen_range(-4.0..4.0),
        rng.gen_range(-4.0..4.0),
        rng.gen_range(-4.0..4.0),
    );
    let direction = random_unit_vector(rng);
    Ray::infinite(origin, direction).expect("unit direction")
}

pub fn random_unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    let v: [f64; 3] = rand_distr::UnitSphere.sample(rng);
    Vec3::new(v[0], v[1], v[2])
}

/// A random rigid transform (proper rotation plus translation).
pub fn random_rigid(rng: &mut ChaCha8Rng) -> Mat4 {
    let axis = nalgebra::Unit::new_normalize(random_unit_vector(rng));
    let angle = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let rot = nalgebra::Rotation3::from_axis_angle(&axis, angle).into_inner();
    let t = Vec3::new(
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
    );
    compose_rigid(&rot, &t)
}
