//! Recovers the directional-light direction and ambient intensity from
//! reference images by gradient descent on photometric losses.
//!
//! The light direction is parametrized by azimuth and elevation, so the
//! mapped direction is exactly unit length at every iterate. Gradients are
//! central finite differences through the full shading computation: the
//! loss sits behind a shadow-ray and clamped-cosine pipeline in just five
//! parameters, so probing it is cheaper than deriving it. The loss blends
//! from a grey target (which supplies a useful slope even when the light
//! starts antipodal and the directional term is fully clamped) into the RGB
//! reconstruction error, plus a small prior pulling ambient toward 0.1.

use rand::seq::index::sample as index_sample;
use rayon::prelude::*;

use crate::body::{pose_gaussians, PoseFrame};
use crate::error::{GscError, Result};
use crate::gaussian::{transmittance_prepared, PreparedGaussian};
use crate::img::{ImageGray, ImageRgb};
use crate::math::{Ray, Vec3};
use crate::render::gbuffer_for_frame;
use crate::scene::Scene;
use crate::shading::{DirectionalLight, DEFAULT_LIGHT_COLOR};

/// Grey value the early-phase loss drives rendered pixels toward.
pub const GREY_TARGET: f64 = 0.75;

/// Ambient magnitude preferred by the regularizer.
pub const AMBIENT_PRIOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightParams {
    pub azimuth: f64,
    pub elevation: f64,
    pub ambient: Vec3,
}

impl LightParams {
    pub fn new(azimuth: f64, elevation: f64, ambient: Vec3) -> Result<Self> {
        if !(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2).contains(&elevation) {
            return Err(GscError::invalid_parameter("elevation", "must be within [-pi/2, pi/2]"));
        }
        Ok(LightParams { azimuth, elevation, ambient })
    }

    pub fn direction(&self) -> Vec3 {
        crate::math::direction_from_angles(self.azimuth, self.elevation)
    }

    /// Directional light with the color held fixed (white x1.5 by default).
    pub fn to_light(&self) -> DirectionalLight {
        DirectionalLight {
            direction: self.direction(),
            color: DEFAULT_LIGHT_COLOR,
            ambient: self.ambient,
        }
    }

    /// The opposite direction with the same ambient, for robustness checks.
    pub fn antipode(&self) -> LightParams {
        LightParams {
            azimuth: self.azimuth + std::f64::consts::PI,
            elevation: -self.elevation,
            ambient: self.ambient,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub iterations: usize,
    /// Base step; decays linearly to a tenth over the run.
    pub step_size: f64,
    /// Iteration where the grey-to-RGB blend starts ramping.
    pub grey_start: usize,
    /// Iteration where the blend reaches pure RGB.
    pub grey_end: usize,
    pub w_amb: f64,
    /// Reference frames evaluated per iteration (seeded random subset).
    pub frames_per_iter: usize,
    /// Central-difference step (radians for angles, linear for ambient).
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            iterations: 400,
            step_size: 0.25,
            grey_start: 40,
            grey_end: 160,
            w_amb: 0.05,
            frames_per_iter: 2,
            fd_step: 1e-3,
            seed: 0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grey_start >= self.grey_end {
            return Err(GscError::invalid_parameter("grey_start", "must be below grey_end"));
        }
        if self.iterations < self.grey_end {
            return Err(GscError::invalid_parameter("iterations", "must reach grey_end"));
        }
        if !(self.step_size > 0.0) || !(self.fd_step > 0.0) {
            return Err(GscError::invalid_parameter("step_size", "steps must be > 0"));
        }
        if self.frames_per_iter == 0 {
            return Err(GscError::invalid_parameter("frames_per_iter", "must be >= 1"));
        }
        Ok(())
    }
}

/// Grey-to-RGB blend factor: 0 before `start`, 1 after `end`, linear in
/// between.
pub fn blend_beta(iter: usize, start: usize, end: usize) -> f64 {
    if iter <= start {
        0.0
    } else if iter >= end {
        1.0
    } else {
        (iter - start) as f64 / (end - start) as f64
    }
}

/// Mean absolute per-channel difference over masked pixels (0 when the mask
/// selects nothing).
pub fn loss_rgb(rendered: &ImageRgb, reference: &ImageRgb, mask: &ImageGray) -> Result<f64> {
    if !rendered.same_size(reference) || mask.width != rendered.width || mask.height != rendered.height {
        return Err(GscError::InvalidInput("image/mask dimensions differ".into()));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for idx in 0..rendered.pixels.len() {
        if mask.pixels[idx] > 0.5 {
            let d = rendered.pixels[idx] - reference.pixels[idx];
            sum += d.x.abs() + d.y.abs() + d.z.abs();
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { sum / (3 * count) as f64 })
}

/// Mean absolute deviation from the grey target over masked pixels.
pub fn loss_grey(rendered: &ImageRgb, mask: &ImageGray) -> Result<f64> {
    let grey = ImageRgb::filled(
        rendered.width,
        rendered.height,
        Vec3::new(GREY_TARGET, GREY_TARGET, GREY_TARGET),
    );
    loss_rgb(rendered, &grey, mask)
}

/// Mean absolute difference between an accumulation image and a mask.
pub fn loss_mask(accumulation: &ImageGray, mask: &ImageGray) -> Result<f64> {
    if accumulation.width != mask.width || accumulation.height != mask.height {
        return Err(GscError::InvalidInput("image/mask dimensions differ".into()));
    }
    let n = accumulation.pixels.len();
    let sum: f64 = accumulation
        .pixels
        .iter()
        .zip(&mask.pixels)
        .map(|(a, m)| (a - m).abs())
        .sum();
    Ok(sum / n as f64)
}

/// Squared distance of the ambient color from the 0.1 prior.
pub fn loss_ambient(ambient: &Vec3) -> f64 {
    let d = ambient - Vec3::new(AMBIENT_PRIOR, AMBIENT_PRIOR, AMBIENT_PRIOR);
    d.norm_squared()
}

/// One reference observation: an image, its foreground mask, and the pose it
/// was captured in. References are assumed to come from the scene's first
/// camera.
#[derive(Debug, Clone)]
pub struct Reference {
    pub image: ImageRgb,
    pub mask: ImageGray,
    pub pose: PoseFrame,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub params: LightParams,
    pub trace: Vec<f64>,
}

// Precomputed shading inputs for one reference: only pixels that are both
// reference-masked and covered by the G-buffer contribute.
struct FrameCache {
    gaussians: Vec<PreparedGaussian>,
    pixels: Vec<SolvePixel>,
}

struct SolvePixel {
    origin: Vec3,
    normal: Vec3,
    albedo: Vec3,
    reference: Vec3,
}

fn build_cache(scene: &Scene, reference: &Reference, index: usize) -> Result<FrameCache> {
    let camera = &scene.cameras[0];
    if reference.image.width != camera.width || reference.image.height != camera.height {
        return Err(GscError::InvalidInput(format!(
            "reference {index} is {}x{}, camera is {}x{}",
            reference.image.width, reference.image.height, camera.width, camera.height
        )));
    }
    let mut scene_posed = scene.clone();
    scene_posed.poses = vec![reference.pose.clone()];
    let gbuffer = gbuffer_for_frame(&scene_posed, 0, 0)?;
    let world = pose_gaussians(&scene.body, &scene.skeleton, &reference.pose)?;
    let gaussians = PreparedGaussian::prepare_all(&world);

    let mut pixels = Vec::new();
    for y in 0..gbuffer.height {
        for x in 0..gbuffer.width {
            let idx = y * gbuffer.width + x;
            if reference.mask.pixels[idx] <= 0.5 || !gbuffer.is_foreground(x, y) {
                continue;
            }
            let depth = gbuffer.depth.get(x, y);
            if !depth.is_finite() || depth <= 0.0 {
                continue;
            }
            let normal = gbuffer.normal.get(x, y);
            pixels.push(SolvePixel {
                origin: camera.unproject(x, y, depth) + normal * scene.shadow_bias,
                normal,
                albedo: gbuffer.albedo.get(x, y),
                reference: reference.image.pixels[idx],
            });
        }
    }
    Ok(FrameCache { gaussians, pixels })
}

// Photometric part of the loss for one frame at the candidate light:
// (sum |c - ref|, sum |c - grey|, 3 * pixel count).
fn frame_photometric(cache: &FrameCache, light: &DirectionalLight) -> (f64, f64, usize) {
    let (rgb_sum, grey_sum) = cache
        .pixels
        .par_iter()
        .map(|px| {
            let ray = Ray::infinite(px.origin, light.direction).expect("unit light direction");
            let s = transmittance_prepared(&cache.gaussians, &ray);
            let c = crate::shading::shade_pixel(&px.albedo, &px.normal, s, light);
            let dr = c - px.reference;
            let dg = c - Vec3::new(GREY_TARGET, GREY_TARGET, GREY_TARGET);
            (
                dr.x.abs() + dr.y.abs() + dr.z.abs(),
                dg.x.abs() + dg.y.abs() + dg.z.abs(),
            )
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    (rgb_sum, grey_sum, cache.pixels.len() * 3)
}

fn scheduled_loss(
    caches: &[FrameCache],
    subset: &[usize],
    params: &LightParams,
    beta: f64,
    w_amb: f64,
) -> f64 {
    let light = params.to_light();
    let mut rgb = 0.0;
    let mut grey = 0.0;
    let mut weight = 0usize;
    for &f in subset {
        let (r, g, n) = frame_photometric(&caches[f], &light);
        rgb += r;
        grey += g;
        weight += n;
    }
    let (rgb, grey) = if weight == 0 {
        (0.0, 0.0)
    } else {
        (rgb / weight as f64, grey / weight as f64)
    };
    (1.0 - beta) * grey + beta * rgb + w_amb * loss_ambient(&params.ambient)
}

/// Gradient-descent recovery of the light parameters from reference images.
/// Deterministic for fixed inputs, config, and seed.
pub fn solve(
    scene: &Scene,
    references: &[Reference],
    init: &LightParams,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    if references.is_empty() {
        return Err(GscError::InvalidInput("no reference frames".into()));
    }
    let caches = references
        .iter()
        .enumerate()
        .map(|(i, r)| build_cache(scene, r, i))
        .collect::<Result<Vec<_>>>()?;

    let mut params = *init;
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut rng = crate::oracle::rng(cfg.seed);
    let h = cfg.fd_step;

    for iter in 0..cfg.iterations {
        let subset: Vec<usize> = if cfg.frames_per_iter >= references.len() {
            (0..references.len()).collect()
        } else {
            index_sample(&mut rng, references.len(), cfg.frames_per_iter).into_vec()
        };
        let beta = blend_beta(iter, cfg.grey_start, cfg.grey_end);
        let eval = |p: &LightParams| scheduled_loss(&caches, &subset, p, beta, cfg.w_amb);

        let center = eval(&params);
        if !center.is_finite() {
            return Err(GscError::OptimizationFailure {
                iteration: iter,
                reason: "non-finite loss".into(),
            });
        }
        trace.push(center);

        // Central differences in the five parameters. Elevation probes may
        // step past the pole; the angle-to-direction map stays continuous
        // there, and iterates are rewrapped below.
        let mut probe = params;
        let grad_az = {
            probe.azimuth = params.azimuth + h;
            let plus = eval(&probe);
            probe.azimuth = params.azimuth - h;
            let minus = eval(&probe);
            probe.azimuth = params.azimuth;
            (plus - minus) / (2.0 * h)
        };
        let grad_el = {
            probe.elevation = params.elevation + h;
            let plus = eval(&probe);
            probe.elevation = params.elevation - h;
            let minus = eval(&probe);
            probe.elevation = params.elevation;
            (plus - minus) / (2.0 * h)
        };
        let mut grad_amb = Vec3::zeros();
        for c in 0..3 {
            probe.ambient[c] = params.ambient[c] + h;
            let plus = eval(&probe);
            probe.ambient[c] = params.ambient[c] - h;
            let minus = eval(&probe);
            probe.ambient[c] = params.ambient[c];
            grad_amb[c] = (plus - minus) / (2.0 * h);
        }

        // Linear step decay to a tenth of the base step.
        let step = cfg.step_size * (1.0 - 0.9 * iter as f64 / cfg.iterations.max(1) as f64);
        // An azimuth change moves the direction by cos(elevation) per
        // radian, so the metric correction keeps azimuth mobile near the
        // poles (capped for stability).
        let metric = (1.0 / params.elevation.cos().powi(2)).min(10.0);
        params.azimuth -= step * metric * grad_az;
        params.elevation -= step * grad_el;
        for c in 0..3 {
            params.ambient[c] = (params.ambient[c] - step * grad_amb[c]).clamp(0.0, 1.0);
        }

        // Chart transition across the poles keeps the direction continuous
        // while the stored elevation stays in [-pi/2, pi/2].
        if params.elevation > std::f64::consts::FRAC_PI_2 {
            params.elevation = std::f64::consts::PI - params.elevation;
            params.azimuth += std::f64::consts::PI;
        } else if params.elevation < -std::f64::consts::FRAC_PI_2 {
            params.elevation = -std::f64::consts::PI - params.elevation;
            params.azimuth += std::f64::consts::PI;
        }
    }

    // Keep the reported azimuth in (-pi, pi] for readability.
    params.azimuth = params.azimuth.rem_euclid(2.0 * std::f64::consts::PI);
    if params.azimuth > std::f64::consts::PI {
        params.azimuth -= 2.0 * std::f64::consts::PI;
    }
    Ok(SolveResult { params, trace })
}
