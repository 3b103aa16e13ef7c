//! Fits the J x K x 13 body Gaussian parameters to a target density field by
//! gradient descent on the density loss plus size and drift regularizers.
//!
//! Sigma and amplitude are optimized in log space so positivity holds by
//! construction. All gradients are closed-form, including the chain through
//! the Gram-Schmidt orthonormalization of the rotation rows; the
//! finite-difference oracle in `oracle` validates them.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::body::{pose_gaussians, GaussianBody, PoseFrame, Skeleton, PARAMS_PER_GAUSSIAN};
use crate::error::{GscError, Result};
use crate::field::TargetDensityField;
use crate::gaussian::rotation_from_rot6;
use crate::math::{invert_rigid, rotation_translation, transform_point, Mat4, Vec3};

/// Knee of the size regularizer: 0.02 m. Both branches evaluate to 1e-3
/// there, so the loss is continuous.
pub const SIGMA_KNEE: f64 = 0.02;

/// Local-density evaluations with a Mahalanobis exponent above this are
/// skipped; exp(-100) is far below any residual of interest.
const EXPONENT_CUTOFF: f64 = 200.0;

// Per-group step scaling for plain gradient descent. Means see much stiffer
// curvature than the log/rotation parameters at centimeter sigmas.
const STEP_SCALE_MEAN: f64 = 0.02;
const STEP_SCALE_LOG_SIGMA: f64 = 0.5;
const STEP_SCALE_ROT6: f64 = 0.5;
const STEP_SCALE_LOG_AMP: f64 = 0.5;

/// Loss weight as a function of the training iteration: constant, or a
/// piecewise-linear ramp through (iteration, value) breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant(f64),
    PiecewiseLinear(Vec<(usize, f64)>),
}

impl Schedule {
    pub fn constant(v: f64) -> Self {
        Schedule::Constant(v)
    }

    pub fn value_at(&self, iter: usize) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::PiecewiseLinear(points) => {
                if points.is_empty() {
                    return 0.0;
                }
                if iter <= points[0].0 {
                    return points[0].1;
                }
                for pair in points.windows(2) {
                    let (i0, v0) = pair[0];
                    let (i1, v1) = pair[1];
                    if iter <= i1 {
                        let t = (iter - i0) as f64 / (i1 - i0).max(1) as f64;
                        return v0 + (v1 - v0) * t;
                    }
                }
                points[points.len() - 1].1
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub iterations: usize,
    pub step_size: f64,
    /// Query points drawn per iteration.
    pub batch_size: usize,
    pub w_density: Schedule,
    pub w_sigma: Schedule,
    pub w_mean: Schedule,
    pub seed: u64,
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(GscError::invalid_parameter("iterations", "must be >= 1"));
        }
        if self.batch_size < 1 {
            return Err(GscError::invalid_parameter("batch_size", "must be >= 1"));
        }
        if !(self.step_size > 0.0) {
            return Err(GscError::invalid_parameter("step_size", "must be > 0"));
        }
        Ok(())
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            iterations: 2000,
            step_size: 0.5,
            batch_size: 1024,
            w_density: Schedule::constant(1.0),
            w_sigma: Schedule::constant(1e-3),
            w_mean: Schedule::constant(1e-3),
            seed: 0,
        }
    }
}

/// Mean squared difference between the body density and the field over the
/// given query points.
pub fn loss_density(
    body: &GaussianBody,
    skeleton: &Skeleton,
    pose: &PoseFrame,
    field: &TargetDensityField,
    points: &[Vec3],
) -> Result<f64> {
    if points.is_empty() {
        return Err(GscError::InvalidInput("empty query point list".into()));
    }
    let mut sum = 0.0;
    for p in points {
        let g = crate::body::body_density(body, skeleton, pose, p)?;
        let r = g - field.density_at(p);
        sum += r * r;
    }
    Ok(sum / points.len() as f64)
}

/// Size regularizer for one standard deviation: hyperbolic below the knee,
/// quartic above, continuous at the knee.
pub fn loss_sigma(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(GscError::invalid_parameter("sigma", "must be finite and > 0"));
    }
    Ok(if sigma <= SIGMA_KNEE {
        2e-5 / sigma
    } else {
        100.0 * (sigma - SIGMA_KNEE).powi(4) + 1e-3
    })
}

/// d loss_sigma / d log(sigma).
fn loss_sigma_grad_log(sigma: f64) -> f64 {
    if sigma <= SIGMA_KNEE {
        -2e-5 / sigma
    } else {
        400.0 * (sigma - SIGMA_KNEE).powi(3) * sigma
    }
}

/// [`loss_sigma`] applied per component and summed.
pub fn loss_sigma_vec(sigma: &Vec3) -> Result<f64> {
    Ok(loss_sigma(sigma.x)? + loss_sigma(sigma.y)? + loss_sigma(sigma.z)?)
}

/// Drift regularizer pulling a Gaussian mean toward its bone center:
/// `(100 (mu - b)^4 + 1)^(1/4) - 1` per component, summed. Near-quadratic
/// close to the bone, near-linear far away.
pub fn loss_mean(mu: &Vec3, bone_center: &Vec3) -> f64 {
    let mut sum = 0.0;
    for c in 0..3 {
        let x = mu[c] - bone_center[c];
        sum += (100.0 * x.powi(4) + 1.0).powf(0.25) - 1.0;
    }
    sum
}

/// Per-component gradient of [`loss_mean`] with respect to `mu`.
fn loss_mean_grad(mu: &Vec3, bone_center: &Vec3) -> Vec3 {
    let mut g = Vec3::zeros();
    for c in 0..3 {
        let x = mu[c] - bone_center[c];
        g[c] = 100.0 * x.powi(3) * (100.0 * x.powi(4) + 1.0).powf(-0.75);
    }
    g
}

/// Result of a fit: the refined body and the per-iteration total loss.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub body: GaussianBody,
    pub trace: Vec<f64>,
}

/// The fitting objective over a fixed skeleton, pose and field, expressed on
/// the optimizer parametrization (mean, log sigma, rot6, log amplitude per
/// Gaussian, 13 values each, joints outermost).
pub struct FitProblem<'a> {
    field: &'a TargetDensityField,
    joints: usize,
    k: usize,
    inv_poses: Vec<Mat4>,
    /// Bone centers pulled into each joint's local frame.
    bone_locals: Vec<Vec3>,
    pub w_density: f64,
    pub w_sigma: f64,
    pub w_mean: f64,
}

impl<'a> FitProblem<'a> {
    pub fn new(
        skeleton: &'a Skeleton,
        pose: &'a PoseFrame,
        field: &'a TargetDensityField,
        k: usize,
        w_density: f64,
        w_sigma: f64,
        w_mean: f64,
    ) -> Result<Self> {
        if pose.joint_count() != skeleton.joint_count() {
            return Err(GscError::InvalidInput(format!(
                "pose has {} joints, skeleton {}",
                pose.joint_count(),
                skeleton.joint_count()
            )));
        }
        let inv_poses: Vec<Mat4> = pose.transforms.iter().map(invert_rigid).collect();
        let bone_locals = skeleton
            .bone_centers()
            .iter()
            .zip(&inv_poses)
            .map(|(b, inv)| transform_point(inv, b))
            .collect();
        Ok(FitProblem {
            field,
            joints: skeleton.joint_count(),
            k,
            inv_poses,
            bone_locals,
            w_density,
            w_sigma,
            w_mean,
        })
    }

    pub fn param_count(&self) -> usize {
        self.joints * self.k * PARAMS_PER_GAUSSIAN
    }

    /// Body -> optimizer parameter vector.
    pub fn pack_opt(body: &GaussianBody) -> Vec<f64> {
        let mut out = Vec::with_capacity(body.gaussian_count() * PARAMS_PER_GAUSSIAN);
        for row in &body.gaussians {
            for g in row {
                out.extend_from_slice(&[g.mean.x, g.mean.y, g.mean.z]);
                out.extend_from_slice(&[g.sigma.x.ln(), g.sigma.y.ln(), g.sigma.z.ln()]);
                out.extend_from_slice(&g.rot6);
                out.push(g.amplitude.ln());
            }
        }
        out
    }

    /// Optimizer parameter vector -> body (validates every Gaussian).
    pub fn unpack_opt(&self, params: &[f64]) -> Result<GaussianBody> {
        if params.len() != self.param_count() {
            return Err(GscError::InvalidInput(format!(
                "expected {} optimizer parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut gaussians = Vec::with_capacity(self.joints);
        for j in 0..self.joints {
            let mut row = Vec::with_capacity(self.k);
            for k in 0..self.k {
                let o = (j * self.k + k) * PARAMS_PER_GAUSSIAN;
                let p = &params[o..o + PARAMS_PER_GAUSSIAN];
                row.push(crate::gaussian::AnisoGaussian::new(
                    Vec3::new(p[0], p[1], p[2]),
                    Vec3::new(p[3].exp(), p[4].exp(), p[5].exp()),
                    [p[6], p[7], p[8], p[9], p[10], p[11]],
                    p[12].exp(),
                )?);
            }
            gaussians.push(row);
        }
        GaussianBody::new(gaussians)
    }

    /// Total loss at `params` over the given query points.
    pub fn loss(&self, params: &[f64], points: &[Vec3]) -> Result<f64> {
        self.evaluate(params, points, false).map(|(l, _)| l)
    }

    /// Total loss and its gradient with respect to the optimizer parameters.
    pub fn loss_and_grad(&self, params: &[f64], points: &[Vec3]) -> Result<(f64, Vec<f64>)> {
        self.evaluate(params, points, true)
            .map(|(l, g)| (l, g.expect("gradient requested")))
    }

    fn evaluate(
        &self,
        params: &[f64],
        points: &[Vec3],
        with_grad: bool,
    ) -> Result<(f64, Option<Vec<f64>>)> {
        if points.is_empty() {
            return Err(GscError::InvalidInput("empty query point list".into()));
        }
        if params.len() != self.param_count() {
            return Err(GscError::InvalidInput(format!(
                "expected {} optimizer parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let count = self.joints * self.k;
        let ctxs: Vec<GaussCtx> = (0..count)
            .map(|i| GaussCtx::new(&params[i * PARAMS_PER_GAUSSIAN..(i + 1) * PARAMS_PER_GAUSSIAN]))
            .collect::<Result<_>>()?;

        let mut acc = vec![GaussAcc::default(); count];
        let mut evals = vec![PointEval::default(); count];
        let mut locals = vec![Vec3::zeros(); self.joints];
        let n = points.len() as f64;
        let mut density_loss = 0.0;

        for p in points {
            for (j, inv) in self.inv_poses.iter().enumerate() {
                locals[j] = transform_point(inv, p);
            }
            let mut total = 0.0;
            for (i, ctx) in ctxs.iter().enumerate() {
                let local = &locals[i / self.k];
                evals[i] = ctx.eval(local);
                total += evals[i].g;
            }
            let residual = total - self.field.density_at(p);
            density_loss += residual * residual;
            if with_grad {
                // d density_loss / d G_i = 2 residual / n for every Gaussian.
                let coeff = 2.0 * residual / n;
                for (i, ctx) in ctxs.iter().enumerate() {
                    acc[i].absorb(ctx, &evals[i], coeff);
                }
            }
        }
        density_loss /= n;

        let mut reg_sigma = 0.0;
        let mut reg_mean = 0.0;
        for (i, ctx) in ctxs.iter().enumerate() {
            reg_sigma += loss_sigma_vec(&ctx.sigma)?;
            reg_mean += loss_mean(&ctx.mean, &self.bone_locals[i / self.k]);
        }
        let loss = self.w_density * density_loss
            + self.w_sigma * reg_sigma
            + self.w_mean * reg_mean;

        if !with_grad {
            return Ok((loss, None));
        }

        let mut grad = vec![0.0; params.len()];
        for (i, ctx) in ctxs.iter().enumerate() {
            let o = i * PARAMS_PER_GAUSSIAN;
            let a = &acc[i];
            let bone = &self.bone_locals[i / self.k];
            let mean_reg = loss_mean_grad(&ctx.mean, bone);
            for c in 0..3 {
                grad[o + c] = self.w_density * a.d_mean[c] + self.w_mean * mean_reg[c];
                grad[o + 3 + c] = self.w_density * a.d_log_sigma[c]
                    + self.w_sigma * loss_sigma_grad_log(ctx.sigma[c]);
            }
            let d_rot6 = ctx.backprop_rows(&a.d_rows);
            for c in 0..6 {
                grad[o + 6 + c] = self.w_density * d_rot6[c];
            }
            grad[o + 12] = self.w_density * a.d_log_amp;
        }
        Ok((loss, Some(grad)))
    }
}

/// Per-Gaussian quantities reused across every query point of an iteration,
/// including the Gram-Schmidt intermediates needed for the rotation
/// backprop.
struct GaussCtx {
    mean: Vec3,
    sigma: Vec3,
    inv_sig2: Vec3,
    amp: f64,
    rows: [Vec3; 3],
    // Gram-Schmidt intermediates.
    raw_b: Vec3,
    a_norm: f64,
    w_norm: f64,
}

impl GaussCtx {
    fn new(p: &[f64]) -> Result<Self> {
        let mean = Vec3::new(p[0], p[1], p[2]);
        let sigma = Vec3::new(p[3].exp(), p[4].exp(), p[5].exp());
        let amp = p[12].exp();
        let raw_a = Vec3::new(p[6], p[7], p[8]);
        let raw_b = Vec3::new(p[9], p[10], p[11]);
        let a_norm = raw_a.norm();
        if a_norm < 1e-12 {
            return Err(GscError::invalid_parameter("rot6", "zero-length row"));
        }
        let r0 = raw_a / a_norm;
        let w = raw_b - r0 * raw_b.dot(&r0);
        let w_norm = w.norm();
        if w_norm < crate::gaussian::ROT6_PARALLEL_THRESHOLD * raw_b.norm() {
            return Err(GscError::invalid_parameter("rot6", "rows are near parallel"));
        }
        let r1 = w / w_norm;
        let r2 = r0.cross(&r1);
        Ok(GaussCtx {
            mean,
            sigma,
            inv_sig2: Vec3::new(
                1.0 / (sigma.x * sigma.x),
                1.0 / (sigma.y * sigma.y),
                1.0 / (sigma.z * sigma.z),
            ),
            amp,
            rows: [r0, r1, r2],
            raw_b,
            a_norm,
            w_norm,
        })
    }

    /// Density and the intermediates its gradient needs, at a local point.
    #[inline]
    fn eval(&self, y: &Vec3) -> PointEval {
        let d = self.mean - y;
        let u = Vec3::new(
            self.rows[0].dot(&d),
            self.rows[1].dot(&d),
            self.rows[2].dot(&d),
        );
        let q = u.x * u.x * self.inv_sig2.x
            + u.y * u.y * self.inv_sig2.y
            + u.z * u.z * self.inv_sig2.z;
        let g = if q > EXPONENT_CUTOFF {
            0.0
        } else {
            self.amp * (-0.5 * q).exp()
        };
        PointEval { g, u, d }
    }

    /// Pulls accumulated row gradients back through the Gram-Schmidt
    /// construction to the raw rot6 values.
    fn backprop_rows(&self, d_rows: &[Vec3; 3]) -> [f64; 6] {
        let [r0, r1, _r2] = self.rows;
        let mut g_r0 = d_rows[0];
        let mut g_r1 = d_rows[1];
        // r2 = r0 x r1.
        g_r0 += r1.cross(&d_rows[2]);
        g_r1 -= r0.cross(&d_rows[2]);
        // r1 = w / |w|.
        let g_w = (g_r1 - r1 * r1.dot(&g_r1)) / self.w_norm;
        // w = b - (b . r0) r0.
        let g_b = g_w - r0 * r0.dot(&g_w);
        g_r0 -= self.raw_b * r0.dot(&g_w) + g_w * self.raw_b.dot(&r0);
        // r0 = a / |a|.
        let g_a = (g_r0 - r0 * r0.dot(&g_r0)) / self.a_norm;
        [g_a.x, g_a.y, g_a.z, g_b.x, g_b.y, g_b.z]
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct PointEval {
    g: f64,
    u: Vec3,
    d: Vec3,
}

/// Gradient accumulator for one Gaussian over a point batch. Rotation
/// gradients are collected per orthonormal row and pulled back to rot6 once
/// per batch (the chain is linear in the row gradients).
#[derive(Debug, Clone, Default)]
struct GaussAcc {
    d_mean: Vec3,
    d_log_sigma: Vec3,
    d_rows: [Vec3; 3],
    d_log_amp: f64,
}

impl GaussAcc {
    #[inline]
    fn absorb(&mut self, ctx: &GaussCtx, eval: &PointEval, coeff: f64) {
        if eval.g == 0.0 {
            return;
        }
        let cg = coeff * eval.g;
        let su = Vec3::new(
            eval.u.x * ctx.inv_sig2.x,
            eval.u.y * ctx.inv_sig2.y,
            eval.u.z * ctx.inv_sig2.z,
        );
        // d G / d mean = -G * P (mean - y) with P d = sum_k (u_k / s_k^2) r_k.
        self.d_mean -= cg * (ctx.rows[0] * su.x + ctx.rows[1] * su.y + ctx.rows[2] * su.z);
        // d G / d log sigma_k = G * u_k^2 / sigma_k^2.
        self.d_log_sigma += cg * Vec3::new(eval.u.x * su.x, eval.u.y * su.y, eval.u.z * su.z);
        // d G / d r_k = -G * (u_k / sigma_k^2) * d.
        self.d_rows[0] -= cg * su.x * eval.d;
        self.d_rows[1] -= cg * su.y * eval.d;
        self.d_rows[2] -= cg * su.z * eval.d;
        self.d_log_amp += cg;
    }
}

/// Deterministic query-point sampler: half uniform in the field's bounding
/// box, half concentrated inside the 3-sigma ellipsoids of the current
/// posed Gaussians (clamped to the box).
pub fn sample_query_points(
    field: &TargetDensityField,
    body: &GaussianBody,
    skeleton: &Skeleton,
    pose: &PoseFrame,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec3>> {
    if n == 0 {
        return Err(GscError::InvalidInput("cannot sample zero query points".into()));
    }
    let world = pose_gaussians(body, skeleton, pose)?;
    let shapes: Vec<(Vec3, Vec3, crate::math::Mat3)> = world
        .iter()
        .map(|g| {
            let r = rotation_from_rot6(&g.rot6).expect("validated");
            (g.mean, g.sigma, r)
        })
        .collect();
    let mut rng = crate::oracle::rng(seed);
    Ok(sample_points_impl(field, &shapes, n, &mut rng))
}

fn sample_points_impl(
    field: &TargetDensityField,
    shapes: &[(Vec3, Vec3, crate::math::Mat3)],
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec3> {
    let uniform_count = n / 2;
    let mut points = Vec::with_capacity(n);
    for _ in 0..uniform_count {
        points.push(Vec3::new(
            rng.gen_range(field.bbox_min.x..=field.bbox_max.x),
            rng.gen_range(field.bbox_min.y..=field.bbox_max.y),
            rng.gen_range(field.bbox_min.z..=field.bbox_max.z),
        ));
    }
    for _ in uniform_count..n {
        let (mean, sigma, r) = &shapes[rng.gen_range(0..shapes.len())];
        // Uniform in the unit ball by rejection, then stretch to 3 sigma
        // along the Gaussian's axes.
        let u = loop {
            let c = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if c.norm_squared() <= 1.0 {
                break c;
            }
        };
        let axes_offset = Vec3::new(3.0 * sigma.x * u.x, 3.0 * sigma.y * u.y, 3.0 * sigma.z * u.z);
        let world = mean + r.transpose() * axes_offset;
        points.push(field.clamp_to_box(&world));
    }
    points
}

/// Gradient-descent fit of `body0` to the field in the given (reference)
/// pose. Deterministic for a fixed config.
pub fn fit(
    body0: &GaussianBody,
    skeleton: &Skeleton,
    pose: &PoseFrame,
    field: &TargetDensityField,
    cfg: &FitConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    if body0.joint_count() != skeleton.joint_count() {
        return Err(GscError::InvalidInput(format!(
            "body has {} joints, skeleton {}",
            body0.joint_count(),
            skeleton.joint_count()
        )));
    }
    let mut problem = FitProblem::new(skeleton, pose, field, body0.k(), 1.0, 1.0, 1.0)?;
    let count = skeleton.joint_count() * body0.k();
    let mut params = FitProblem::pack_opt(body0);
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut master = crate::oracle::rng(cfg.seed);

    for iter in 0..cfg.iterations {
        // World-space shapes of the current Gaussians, for the sampler.
        let shapes: Vec<(Vec3, Vec3, crate::math::Mat3)> = (0..count)
            .map(|i| {
                let ctx = GaussCtx::new(
                    &params[i * PARAMS_PER_GAUSSIAN..(i + 1) * PARAMS_PER_GAUSSIAN],
                )
                .map_err(|e| GscError::OptimizationFailure {
                    iteration: iter,
                    reason: e.to_string(),
                })?;
                let j = i / body0.k();
                let (q, t) = rotation_translation(&pose.transforms[j]);
                let world_mean = q * ctx.mean + t;
                let world_r = crate::math::Mat3::from_rows(&[
                    ctx.rows[0].transpose(),
                    ctx.rows[1].transpose(),
                    ctx.rows[2].transpose(),
                ]) * q.transpose();
                Ok((world_mean, ctx.sigma, world_r))
            })
            .collect::<Result<_>>()?;
        let batch_seed = master.gen::<u64>();
        let mut batch_rng = crate::oracle::rng(batch_seed);
        let points = sample_points_impl(field, &shapes, cfg.batch_size, &mut batch_rng);

        problem.w_density = cfg.w_density.value_at(iter);
        problem.w_sigma = cfg.w_sigma.value_at(iter);
        problem.w_mean = cfg.w_mean.value_at(iter);
        let (loss, grad) = problem.loss_and_grad(&params, &points)?;
        if !loss.is_finite() {
            return Err(GscError::OptimizationFailure {
                iteration: iter,
                reason: "non-finite loss".into(),
            });
        }
        trace.push(loss);

        for i in 0..count {
            let o = i * PARAMS_PER_GAUSSIAN;
            for c in 0..3 {
                params[o + c] -= cfg.step_size * STEP_SCALE_MEAN * grad[o + c];
                params[o + 3 + c] -= cfg.step_size * STEP_SCALE_LOG_SIGMA * grad[o + 3 + c];
            }
            for c in 0..6 {
                params[o + 6 + c] -= cfg.step_size * STEP_SCALE_ROT6 * grad[o + 6 + c];
            }
            params[o + 12] -= cfg.step_size * STEP_SCALE_LOG_AMP * grad[o + 12];
        }
    }

    let body = problem
        .unpack_opt(&params)
        .map_err(|e| GscError::OptimizationFailure {
            iteration: cfg.iterations,
            reason: e.to_string(),
        })?;
    Ok(FitResult { body, trace })
}

/// Initial body for fitting: K Gaussians per joint placed evenly along each
/// bone segment (joint center to first child; leaves collapse to the joint),
/// isotropic sigma 0.05 m, amplitude 1, expressed in joint-local frames of
/// the given pose.
pub fn init_body_along_bones(
    skeleton: &Skeleton,
    pose: &PoseFrame,
    k: usize,
) -> Result<GaussianBody> {
    if k == 0 {
        return Err(GscError::invalid_parameter("k", "must be >= 1"));
    }
    let mut gaussians = Vec::with_capacity(skeleton.joint_count());
    for j in 0..skeleton.joint_count() {
        let start = skeleton.rest_centers[j];
        let end = match skeleton.first_child(j) {
            Some(c) => skeleton.rest_centers[c],
            None => start,
        };
        let inv = invert_rigid(&pose.transforms[j]);
        let mut row = Vec::with_capacity(k);
        for i in 0..k {
            let t = (i as f64 + 0.5) / k as f64;
            let world = start + (end - start) * t;
            row.push(crate::gaussian::AnisoGaussian::isotropic(
                transform_point(&inv, &world),
                0.05,
                1.0,
            )?);
        }
        gaussians.push(row);
    }
    GaussianBody::new(gaussians)
}
