//! Deferred Lambertian shading with analytic Gaussian shadows.
//!
//! The lit color of a foreground pixel is
//! `albedo * (ambient + s * light_color * max(0, light_dir . normal))`
//! where the shadow value `s` is the transmittance of one secondary ray from
//! the reconstructed surface point toward the light. Ground shadows modulate
//! a background plane the same way, and HDRi relighting replaces the single
//! light with environment rays (one importance ray at the brightest texel
//! plus cosine-weighted diffuse rays).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::camera::Camera;
use crate::envmap::EnvironmentMap;
use crate::error::{GscError, Result};
use crate::gaussian::{transmittance_prepared, PreparedGaussian};
use crate::gbuffer::GBuffer;
use crate::img::{ImageGray, ImageRgb};
use crate::math::{Ray, Vec3};

/// Shadow rays start this far along the surface normal (meters). Without a
/// bias, the smooth Gaussians representing the surface's own body part
/// darken every surface point.
pub const DEFAULT_SHADOW_BIAS: f64 = 0.02;

/// One directional light plus an ambient term.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalLight {
    /// Unit vector from the surface toward the light.
    pub direction: Vec3,
    /// Directional color; white with magnitude 1.5 unless overridden, which
    /// keeps the shading equation from being over-parametrized.
    pub color: Vec3,
    /// Ambient color in [0, 1]^3.
    pub ambient: Vec3,
}

pub const DEFAULT_LIGHT_COLOR: Vec3 = Vec3::new(1.5, 1.5, 1.5);

impl DirectionalLight {
    pub fn new(direction: Vec3, color: Vec3, ambient: Vec3) -> Result<Self> {
        let norm = direction.norm();
        if norm < 1e-12 || !direction.iter().all(|c| c.is_finite()) {
            return Err(GscError::invalid_parameter("light.direction", "must be a non-zero finite vector"));
        }
        Ok(DirectionalLight { direction: direction / norm, color, ambient })
    }

    pub fn from_angles(azimuth: f64, elevation: f64, color: Vec3, ambient: Vec3) -> Result<Self> {
        DirectionalLight::new(
            crate::math::direction_from_angles(azimuth, elevation),
            color,
            ambient,
        )
    }
}

/// Background the ground shadow modulates: a constant color or a camera-
/// aligned image.
#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    Color(Vec3),
    Image(ImageRgb),
}

impl Background {
    fn sample(&self, x: usize, y: usize) -> Vec3 {
        match self {
            Background::Color(c) => *c,
            Background::Image(img) => img.get(x.min(img.width - 1), y.min(img.height - 1)),
        }
    }
}

/// Shadow-receiving ground plane.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundPlane {
    pub point: Vec3,
    pub normal: Vec3,
    pub background: Background,
}

impl GroundPlane {
    pub fn new(point: Vec3, normal: Vec3, background: Background) -> Result<Self> {
        let n = normal.norm();
        if n < 1e-12 {
            return Err(GscError::invalid_parameter("ground_plane.normal", "must be non-zero"));
        }
        Ok(GroundPlane { point, normal: normal / n, background })
    }

    /// Ray parameter of the intersection with the plane, if in front.
    pub fn intersect(&self, ray: &Ray) -> Option<f64> {
        let denom = self.normal.dot(&ray.direction);
        if denom.abs() < 1e-9 {
            return None;
        }
        let t = self.normal.dot(&(self.point - ray.origin)) / denom;
        (t > ray.t_min && t < ray.t_max).then_some(t)
    }
}

/// The Lambertian shading equation for one pixel.
#[inline]
pub fn shade_pixel(albedo: &Vec3, normal: &Vec3, shadow: f64, light: &DirectionalLight) -> Vec3 {
    let cos = light.direction.dot(normal).max(0.0);
    let radiance = light.ambient + light.color * (shadow * cos);
    albedo.component_mul(&radiance)
}

/// Counters for pixels the shadow pass could not process.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ShadowDiagnostics {
    /// Foreground pixels with a missing or non-finite depth; they received
    /// s = 1.
    pub invalid_pixels: usize,
}

/// Shadow map: one secondary ray per foreground pixel from the biased
/// surface point toward the light; background pixels get s = 1.
pub fn shadow_map(
    gbuffer: &GBuffer,
    camera: &Camera,
    gaussians: &[PreparedGaussian],
    light: &DirectionalLight,
    bias: f64,
) -> (ImageGray, ShadowDiagnostics) {
    let (w, h) = (gbuffer.width, gbuffer.height);
    let results: Vec<(f64, bool)> = (0..w * h)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (idx % w, idx / w);
            if !gbuffer.is_foreground(x, y) {
                return (1.0, false);
            }
            let depth = gbuffer.depth.get(x, y);
            if !depth.is_finite() || depth <= 0.0 {
                return (1.0, true);
            }
            let surface = camera.unproject(x, y, depth);
            let normal = gbuffer.normal.get(x, y);
            let origin = surface + normal * bias;
            let ray = Ray::infinite(origin, light.direction).expect("unit light direction");
            (transmittance_prepared(gaussians, &ray), false)
        })
        .collect();

    let mut map = ImageGray::filled(w, h, 1.0);
    let mut diag = ShadowDiagnostics::default();
    for (idx, (s, invalid)) in results.into_iter().enumerate() {
        map.pixels[idx] = s;
        if invalid {
            diag.invalid_pixels += 1;
        }
    }
    (map, diag)
}

/// Background layer with the Gaussian shadow cast onto the ground plane:
/// every pixel whose view ray hits the plane is the background sample
/// modulated by the transmittance from the plane point toward the light;
/// rays missing the plane return the unmodulated background.
pub fn ground_shadow(
    plane: &GroundPlane,
    gaussians: &[PreparedGaussian],
    light: &DirectionalLight,
    camera: &Camera,
) -> ImageRgb {
    let (w, h) = (camera.width, camera.height);
    let pixels: Vec<Vec3> = (0..w * h)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (idx % w, idx / w);
            let base = plane.background.sample(x, y);
            let view = camera.pixel_ray(x, y);
            match plane.intersect(&view) {
                Some(t) => {
                    let p = view.at(t);
                    let ray = Ray::infinite(p, light.direction).expect("unit light direction");
                    base * transmittance_prepared(gaussians, &ray)
                }
                None => base,
            }
        })
        .collect();
    ImageRgb { width: w, height: h, pixels }
}

/// Uniform unit vector from the pixel's RNG stream.
fn random_unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    let v: [f64; 3] = rand_distr::UnitSphere.sample(rng);
    Vec3::new(v[0], v[1], v[2])
}

use rand_distr::Distribution;

/// HDRi relighting of the foreground. Per pixel, `n_rays` secondary rays
/// query the environment: ray 1 goes to the precomputed brightest texel
/// (weighted by its solid angle over pi, as the explicit sun term of the
/// diffuse integral), the rest are cosine-weighted samples
/// (`normalize(normal + uniform unit vector)`) whose radiance is averaged
/// directly, the cosine cancelling against the sampling density. The sun
/// texel is masked out of the diffuse lookups so the two parts partition
/// the environment. Deterministic: each pixel draws from its own seeded
/// stream, so worker count cannot change the image.
pub fn relight_hdri(
    gbuffer: &GBuffer,
    camera: &Camera,
    gaussians: &[PreparedGaussian],
    env: &EnvironmentMap,
    n_rays: usize,
    bias: f64,
    seed: u64,
) -> Result<ImageRgb> {
    if n_rays < 1 {
        return Err(GscError::invalid_parameter("n_rays", "must be >= 1"));
    }
    let (w, h) = (gbuffer.width, gbuffer.height);
    let sun_dir = env.brightest_direction();
    let sun_radiance = env.brightest_radiance();
    let sun_weight = env.brightest_solid_angle() / std::f64::consts::PI;

    let pixels: Vec<Vec3> = (0..w * h)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (idx % w, idx / w);
            if !gbuffer.is_foreground(x, y) {
                return Vec3::zeros();
            }
            let depth = gbuffer.depth.get(x, y);
            if !depth.is_finite() || depth <= 0.0 {
                return Vec3::zeros();
            }
            let normal = gbuffer.normal.get(x, y);
            let origin = camera.unproject(x, y, depth) + normal * bias;

            // Importance ray toward the sun texel.
            let mut irradiance = Vec3::zeros();
            let cos_sun = sun_dir.dot(&normal).max(0.0);
            if cos_sun > 0.0 {
                let ray = Ray::infinite(origin, sun_dir).expect("unit sun direction");
                let t = transmittance_prepared(gaussians, &ray);
                irradiance += sun_radiance * (t * cos_sun * sun_weight);
            }

            // Cosine-weighted diffuse rays.
            if n_rays > 1 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(idx as u64);
                let mut diffuse = Vec3::zeros();
                for _ in 1..n_rays {
                    let dir = loop {
                        let candidate = normal + random_unit_vector(&mut rng);
                        let len = candidate.norm();
                        if len > 1e-9 {
                            break candidate / len;
                        }
                    };
                    let radiance = env.radiance_excluding_brightest(&dir);
                    if radiance != Vec3::zeros() {
                        let ray = Ray::infinite(origin, dir).expect("unit direction");
                        diffuse += radiance * transmittance_prepared(gaussians, &ray);
                    }
                }
                irradiance += diffuse / (n_rays - 1) as f64;
            }

            gbuffer.albedo.get(x, y).component_mul(&irradiance)
        })
        .collect();
    Ok(ImageRgb { width: w, height: h, pixels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::AnisoGaussian;
    use crate::gbuffer::analytic_gbuffer;
    use crate::oracle::{quad_transmittance, QuadratureConfig};

    fn white_light(direction: Vec3) -> DirectionalLight {
        DirectionalLight::new(direction, DEFAULT_LIGHT_COLOR, Vec3::new(0.1, 0.1, 0.1)).unwrap()
    }

    #[test]
    fn shade_pixel_spot_checks() {
        let light = white_light(Vec3::z());
        let albedo = Vec3::new(1.0, 1.0, 1.0);
        // Full light, aligned normal: ambient + 1.5.
        let lit = shade_pixel(&albedo, &Vec3::z(), 1.0, &light);
        assert_eq!(lit, Vec3::new(1.6, 1.6, 1.6));
        // Fully shadowed: ambient only.
        let dark = shade_pixel(&albedo, &Vec3::z(), 0.0, &light);
        assert_eq!(dark, Vec3::new(0.1, 0.1, 0.1));
        // Back-facing normal clamps to the same ambient-only value.
        let tilted = shade_pixel(
            &albedo,
            &Vec3::new(0.0, (0.75f64).sqrt(), -0.5),
            1.0,
            &light,
        );
        assert_eq!(tilted, dark);
    }

    #[test]
    fn shade_pixel_monotone_in_shadow_and_linear_in_albedo() {
        let light = white_light(Vec3::new(0.3, -0.2, 0.93).normalize());
        let n = Vec3::new(0.1, 0.2, 0.97).normalize();
        let albedo = Vec3::new(0.4, 0.5, 0.6);
        let mut prev = Vec3::zeros();
        for i in 0..=10 {
            let s = i as f64 / 10.0;
            let c = shade_pixel(&albedo, &n, s, &light);
            assert!(c.x >= prev.x && c.y >= prev.y && c.z >= prev.z);
            prev = c;
        }
        let single = shade_pixel(&albedo, &n, 0.7, &light);
        let double = shade_pixel(&(albedo * 2.0), &n, 0.7, &light);
        assert!((double - single * 2.0).norm() < 1e-15);
        // No ambient and full shadow means black.
        let no_amb = DirectionalLight::new(Vec3::z(), DEFAULT_LIGHT_COLOR, Vec3::zeros()).unwrap();
        assert_eq!(shade_pixel(&albedo, &n, 0.0, &no_amb), Vec3::zeros());
    }

    fn camera_looking_at_origin() -> Camera {
        let m = Camera::look_at(Vec3::new(0.0, -4.0, 0.5), Vec3::new(0.0, 0.0, 0.5), Vec3::z())
            .unwrap();
        Camera::centered(40.0, 32, 32, m).unwrap()
    }

    #[test]
    fn shadow_map_empty_scene_is_all_ones() {
        let cam = camera_looking_at_origin();
        let surface = AnisoGaussian::isotropic(Vec3::new(0.0, 0.0, 0.5), 0.5, 1.0).unwrap();
        let gb = analytic_gbuffer(&cam, &[surface], &[Vec3::new(0.75, 0.75, 0.75)]).unwrap();
        let light = white_light(Vec3::z());
        let (map, diag) = shadow_map(&gb, &cam, &[], &light, DEFAULT_SHADOW_BIAS);
        assert!(map.pixels.iter().all(|s| *s == 1.0));
        assert_eq!(diag.invalid_pixels, 0);
    }

    #[test]
    fn shadow_map_occluder_matches_quadrature() {
        let cam = camera_looking_at_origin();
        // A thin surface blob at the origin and a separate occluder above
        // it, wide enough to cover shadow rays leaving the blob's front
        // face, light from the zenith.
        let surface = AnisoGaussian::isotropic(Vec3::new(0.0, 0.0, 0.5), 0.3, 1.0).unwrap();
        let occluder = AnisoGaussian::isotropic(Vec3::new(0.0, 0.0, 2.0), 0.4, 2.0).unwrap();
        let gb = analytic_gbuffer(&cam, &[surface], &[Vec3::new(0.75, 0.75, 0.75)]).unwrap();
        let light = white_light(Vec3::z());
        let occ = crate::gaussian::PreparedGaussian::prepare_all(&[occluder]);
        let (map, diag) = shadow_map(&gb, &cam, &occ, &light, DEFAULT_SHADOW_BIAS);
        assert_eq!(diag.invalid_pixels, 0);

        let (x, y) = (16, 16);
        assert!(gb.is_foreground(x, y));
        let s = map.get(x, y);
        assert!(s < 0.9, "occluder should darken the pixel, s = {s}");

        // Independent quadrature along the same secondary ray.
        let depth = gb.depth.get(x, y);
        let origin = cam.unproject(x, y, depth) + gb.normal.get(x, y) * DEFAULT_SHADOW_BIAS;
        let ray = Ray::infinite(origin, Vec3::z()).unwrap();
        let want = quad_transmittance(
            &[occluder],
            &ray,
            &QuadratureConfig::with_steps(100_000).unwrap(),
        );
        assert!((s - want).abs() < 1e-6, "{s} vs quadrature {want}");

        // Background stays fully lit.
        assert_eq!(map.get(0, 0), 1.0);
    }

    #[test]
    fn shadow_map_reversed_light_sees_empty_space() {
        let cam = camera_looking_at_origin();
        let surface = AnisoGaussian::isotropic(Vec3::new(0.0, 0.0, 0.5), 0.3, 1.0).unwrap();
        let occluder = AnisoGaussian::isotropic(Vec3::new(0.0, 0.0, 3.0), 0.1, 2.0).unwrap();
        let gb = analytic_gbuffer(&cam, &[surface], &[Vec3::new(0.75, 0.75, 0.75)]).unwrap();
        // Light from below: shadow rays leave the occluder's support (the
        // surface blob itself is excluded from the occluder set).
        let light = white_light(-Vec3::z());
        let occ = crate::gaussian::PreparedGaussian::prepare_all(&[occluder]);
        let (map, _) = shadow_map(&gb, &cam, &occ, &light, DEFAULT_SHADOW_BIAS);
        for y in 0..32 {
            for x in 0..32 {
                if gb.is_foreground(x, y) {
                    assert!(map.get(x, y) >= 0.999);
                }
            }
        }
    }

    #[test]
    fn shadow_map_flags_missing_depth() {
        let cam = camera_looking_at_origin();
        let surface = AnisoGaussian::isotropic(Vec3::new(0.0, 0.0, 0.5), 0.4, 1.0).unwrap();
        let mut gb = analytic_gbuffer(&cam, &[surface], &[Vec3::new(0.75, 0.75, 0.75)]).unwrap();
        gb.depth.set(16, 16, f64::NAN);
        assert!(gb.is_foreground(16, 16));
        let light = white_light(Vec3::z());
        let (map, diag) = shadow_map(&gb, &cam, &[], &light, DEFAULT_SHADOW_BIAS);
        assert_eq!(diag.invalid_pixels, 1);
        assert_eq!(map.get(16, 16), 1.0);
    }

    #[test]
    fn ground_shadow_darkens_under_blob() {
        // Steep view onto the plane so the pixel grid samples the footprint
        // under the blob densely.
        let m = Camera::look_at(Vec3::new(0.0, -2.0, 2.5), Vec3::zeros(), Vec3::z()).unwrap();
        let cam = Camera::centered(40.0, 32, 32, m).unwrap();
        let plane = GroundPlane::new(
            Vec3::zeros(),
            Vec3::z(),
            Background::Color(Vec3::new(0.5, 0.5, 0.5)),
        )
        .unwrap();
        let blob = AnisoGaussian::isotropic(Vec3::new(0.0, 0.0, 0.8), 0.2, 3.0).unwrap();
        let light = white_light(Vec3::z());
        let prepared = crate::gaussian::PreparedGaussian::prepare_all(&[blob]);

        let with = ground_shadow(&plane, &prepared, &light, &cam);
        let without = ground_shadow(&plane, &[], &light, &cam);

        // No occluders leaves the background untouched.
        assert!(without
            .pixels
            .iter()
            .all(|p| (p - Vec3::new(0.5, 0.5, 0.5)).norm() < 1e-12));

        // Find the darkest plane pixel and check it against quadrature.
        let mut darkest = (0usize, 1.0f64);
        for (idx, p) in with.pixels.iter().enumerate() {
            let ratio = p.x / 0.5;
            if ratio < darkest.1 {
                darkest = (idx, ratio);
            }
        }
        // Deepest visible shadow should approach the through-center value
        // exp(-3 * 0.2 * sqrt(2 pi)) ~ 0.22.
        assert!(darkest.1 < 0.3, "expected a clear footprint, got {}", darkest.1);
        let (x, y) = (darkest.0 % 32, darkest.0 / 32);
        let view = cam.pixel_ray(x, y);
        let t = plane.intersect(&view).unwrap();
        let ray = Ray::infinite(view.at(t), Vec3::z()).unwrap();
        let want = quad_transmittance(
            &[blob],
            &ray,
            &QuadratureConfig::with_steps(100_000).unwrap(),
        );
        assert!((darkest.1 - want).abs() < 1e-6);
    }

    #[test]
    fn ground_shadow_grazing_light_changes_nothing() {
        let cam = camera_looking_at_origin();
        let plane = GroundPlane::new(
            Vec3::zeros(),
            Vec3::z(),
            Background::Color(Vec3::new(0.5, 0.5, 0.5)),
        )
        .unwrap();
        // Blob far above the plane; light parallel to the plane, so shadow
        // rays from the plane stay > 6 sigma away from the blob.
        let blob = AnisoGaussian::isotropic(Vec3::new(0.0, 0.0, 2.0), 0.1, 3.0).unwrap();
        let light = white_light(Vec3::x());
        let prepared = crate::gaussian::PreparedGaussian::prepare_all(&[blob]);
        let shadowed = ground_shadow(&plane, &prepared, &light, &cam);
        for p in &shadowed.pixels {
            assert!((p.x - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn relight_uniform_sky_gives_albedo_times_radiance() {
        let cam = camera_looking_at_origin();
        let surface = AnisoGaussian::isotropic(Vec3::new(0.0, 0.0, 0.5), 0.4, 1.0).unwrap();
        let albedo = Vec3::new(0.6, 0.45, 0.3);
        let gb = analytic_gbuffer(&cam, &[surface], &[albedo]).unwrap();
        let sky = Vec3::new(0.8, 0.7, 0.9);
        let env = EnvironmentMap::constant(32, 16, sky).unwrap();
        let img = relight_hdri(&gb, &cam, &[], &env, 64, DEFAULT_SHADOW_BIAS, 7).unwrap();
        let want = albedo.component_mul(&sky);
        for y in 0..32 {
            for x in 0..32 {
                if gb.is_foreground(x, y) {
                    let got = img.get(x, y);
                    for c in 0..3 {
                        assert!(
                            (got[c] - want[c]).abs() <= 0.02 * want[c],
                            "pixel ({x},{y}) channel {c}: {} vs {}",
                            got[c],
                            want[c]
                        );
                    }
                } else {
                    assert_eq!(img.get(x, y), Vec3::zeros());
                }
            }
        }
    }

    #[test]
    fn relight_single_bright_texel_matches_directional_light() {
        let cam = camera_looking_at_origin();
        let surface = AnisoGaussian::isotropic(Vec3::new(0.0, 0.0, 0.5), 0.4, 1.0).unwrap();
        let albedo = Vec3::new(0.7, 0.7, 0.7);
        let gb = analytic_gbuffer(&cam, &[surface], &[albedo]).unwrap();

        // Black sky with one bright texel: a delta sun.
        let mut sky = ImageRgb::filled(64, 32, Vec3::zeros());
        sky.set(20, 6, Vec3::new(800.0, 750.0, 700.0));
        let env = EnvironmentMap::new(sky).unwrap();

        let img = relight_hdri(&gb, &cam, &[], &env, 64, DEFAULT_SHADOW_BIAS, 3).unwrap();

        // Equivalent directional light: radiance * solid angle / pi, no
        // ambient, no occluders (s = 1).
        let color = env.brightest_radiance() * env.brightest_solid_angle()
            / std::f64::consts::PI;
        let light = DirectionalLight::new(env.brightest_direction(), color, Vec3::zeros()).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                if !gb.is_foreground(x, y) {
                    continue;
                }
                let want = shade_pixel(&gb.albedo.get(x, y), &gb.normal.get(x, y), 1.0, &light);
                let got = img.get(x, y);
                assert!(
                    (got - want).norm() <= 0.05 * want.norm().max(1e-9),
                    "pixel ({x},{y}): {got:?} vs {want:?}"
                );
            }
        }
    }

    #[test]
    fn relight_single_ray_is_sun_term_only() {
        let cam = camera_looking_at_origin();
        let surface = AnisoGaussian::isotropic(Vec3::new(0.0, 0.0, 0.5), 0.4, 1.0).unwrap();
        let gb = analytic_gbuffer(&cam, &[surface], &[Vec3::new(0.7, 0.7, 0.7)]).unwrap();
        let env = EnvironmentMap::constant(16, 8, Vec3::new(2.0, 2.0, 2.0)).unwrap();
        let img = relight_hdri(&gb, &cam, &[], &env, 1, DEFAULT_SHADOW_BIAS, 1).unwrap();

        let sun_dir = env.brightest_direction();
        let weight = env.brightest_solid_angle() / std::f64::consts::PI;
        for y in 0..32 {
            for x in 0..32 {
                if !gb.is_foreground(x, y) {
                    continue;
                }
                let cos = sun_dir.dot(&gb.normal.get(x, y)).max(0.0);
                let want = gb
                    .albedo
                    .get(x, y)
                    .component_mul(&(env.brightest_radiance() * (cos * weight)));
                assert!((img.get(x, y) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn relight_zero_radiance_is_black() {
        let cam = camera_looking_at_origin();
        let surface = AnisoGaussian::isotropic(Vec3::new(0.0, 0.0, 0.5), 0.4, 1.0).unwrap();
        let gb = analytic_gbuffer(&cam, &[surface], &[Vec3::new(0.7, 0.7, 0.7)]).unwrap();
        let env = EnvironmentMap::constant(16, 8, Vec3::zeros()).unwrap();
        let img = relight_hdri(&gb, &cam, &[], &env, 16, DEFAULT_SHADOW_BIAS, 1).unwrap();
        assert!(img.pixels.iter().all(|p| *p == Vec3::zeros()));
    }

    #[test]
    fn relight_is_deterministic_per_seed() {
        let cam = camera_looking_at_origin();
        let surface = AnisoGaussian::isotropic(Vec3::new(0.0, 0.0, 0.5), 0.4, 1.0).unwrap();
        let occ = AnisoGaussian::isotropic(Vec3::new(0.3, 0.0, 1.2), 0.15, 2.0).unwrap();
        let gb = analytic_gbuffer(&cam, &[surface], &[Vec3::new(0.7, 0.7, 0.7)]).unwrap();
        let env = EnvironmentMap::constant(16, 8, Vec3::new(1.0, 1.0, 1.0)).unwrap();
        let prepared = crate::gaussian::PreparedGaussian::prepare_all(&[occ]);
        let a = relight_hdri(&gb, &cam, &prepared, &env, 32, DEFAULT_SHADOW_BIAS, 5).unwrap();
        let b = relight_hdri(&gb, &cam, &prepared, &env, 32, DEFAULT_SHADOW_BIAS, 5).unwrap();
        let c = relight_hdri(&gb, &cam, &prepared, &env, 32, DEFAULT_SHADOW_BIAS, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn relight_variance_shrinks_with_ray_count() {
        // With an occluder, per-ray transmittances vary, so the estimator
        // has Monte-Carlo variance that should scale roughly as 1/n.
        let cam = camera_looking_at_origin();
        let surface = AnisoGaussian::isotropic(Vec3::new(0.0, 0.0, 0.5), 0.4, 1.0).unwrap();
        let occ = AnisoGaussian::isotropic(Vec3::new(0.2, 0.1, 1.3), 0.25, 4.0).unwrap();
        let gb = analytic_gbuffer(&cam, &[surface], &[Vec3::new(0.7, 0.7, 0.7)]).unwrap();
        let env = EnvironmentMap::constant(16, 8, Vec3::new(1.0, 1.0, 1.0)).unwrap();
        let prepared = crate::gaussian::PreparedGaussian::prepare_all(&[occ]);
        let (px, py) = (16, 16);
        assert!(gb.is_foreground(px, py));

        let variance = |n: usize| -> f64 {
            let samples: Vec<f64> = (0..40)
                .map(|seed| {
                    relight_hdri(&gb, &cam, &prepared, &env, n, DEFAULT_SHADOW_BIAS, seed)
                        .unwrap()
                        .get(px, py)
                        .x
                })
                .collect();
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / samples.len() as f64
        };

        let v16 = variance(16);
        let v64 = variance(64);
        let v256 = variance(256);
        assert!(v64 < v16, "variance must shrink: v16={v16:.3e} v64={v64:.3e}");
        assert!(v256 < v64, "variance must shrink: v64={v64:.3e} v256={v256:.3e}");
        // Roughly 1/n: allow a generous band around the ideal factor 16.
        let ratio = v16 / v256;
        assert!(ratio > 4.0, "expected near-1/n scaling, got ratio {ratio:.2}");
    }
}
