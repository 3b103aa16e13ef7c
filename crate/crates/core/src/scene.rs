//! Scene container and its JSON file format.
//!
//! The scene file is a single JSON document (schema version 1); bulk binary
//! data (environment maps, background photos, G-buffer channels, voxel
//! grids) lives in sidecar files referenced by path, resolved relative to
//! the scene file's directory. All angles are radians, all lengths meters.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::body::{GaussianBody, PoseFrame, Skeleton, PARAMS_PER_GAUSSIAN};
use crate::camera::Camera;
use crate::envmap::EnvironmentMap;
use crate::error::{GscError, Result};
use crate::math::{Mat4, Vec3};
use crate::shading::{Background, DirectionalLight, GroundPlane, DEFAULT_SHADOW_BIAS};

pub const SCHEMA_VERSION: u32 = 1;

/// Directional light as stored in the scene: spherical direction plus
/// ambient and directional colors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightSpec {
    pub azimuth: f64,
    pub elevation: f64,
    pub ambient: [f64; 3],
    #[serde(default = "default_light_color")]
    pub color: [f64; 3],
}

fn default_light_color() -> [f64; 3] {
    [1.5, 1.5, 1.5]
}

impl LightSpec {
    pub fn to_light(&self) -> Result<DirectionalLight> {
        DirectionalLight::from_angles(
            self.azimuth,
            self.elevation,
            Vec3::from_row_slice(&self.color),
            Vec3::from_row_slice(&self.ambient),
        )
    }

    pub fn direction(&self) -> Vec3 {
        crate::math::direction_from_angles(self.azimuth, self.elevation)
    }
}

/// Where the deferred-shading G-buffers come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GBufferSource {
    /// Rasterize the body Gaussians' 1-sigma ellipsoids.
    Analytic,
    /// Load one PFM per channel.
    Files {
        albedo: String,
        normal: String,
        depth: String,
        mask: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundSpec {
    Color([f64; 3]),
    Image(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundPlaneSpec {
    pub point: [f64; 3],
    pub normal: [f64; 3],
    pub background: BackgroundSpec,
}

/// A fully loaded scene: validated runtime structures plus the declarative
/// bits needed to write the file back out.
#[derive(Debug, Clone)]
pub struct Scene {
    pub skeleton: Skeleton,
    pub body: GaussianBody,
    /// Per-Gaussian albedo colors (J x K), used by the analytic G-buffer.
    pub colors: Vec<Vec<Vec3>>,
    pub poses: Vec<PoseFrame>,
    pub cameras: Vec<Camera>,
    pub light: LightSpec,
    pub env_map: Option<EnvironmentMap>,
    pub env_map_path: Option<String>,
    pub ground_plane: Option<GroundPlaneSpec>,
    /// Ground background image, when the spec references one.
    pub ground_image: Option<crate::img::ImageRgb>,
    pub gbuffer_source: GBufferSource,
    /// Base directory for resolving the gbuffer file paths.
    pub base_dir: PathBuf,
    pub shadow_bias: f64,
}

impl Scene {
    pub fn directional_light(&self) -> Result<DirectionalLight> {
        self.light.to_light()
    }

    /// Runtime ground plane with its background resolved.
    pub fn ground(&self) -> Result<Option<GroundPlane>> {
        match &self.ground_plane {
            None => Ok(None),
            Some(spec) => {
                let background = match &spec.background {
                    BackgroundSpec::Color(c) => Background::Color(Vec3::from_row_slice(c)),
                    BackgroundSpec::Image(_) => Background::Image(
                        self.ground_image
                            .clone()
                            .ok_or_else(|| GscError::schema("ground_plane.background", "image not loaded"))?,
                    ),
                };
                Ok(Some(GroundPlane::new(
                    Vec3::from_row_slice(&spec.point),
                    Vec3::from_row_slice(&spec.normal),
                    background,
                )?))
            }
        }
    }

    /// Colors flattened in the same j-major order as posed Gaussians.
    pub fn flat_colors(&self) -> Vec<Vec3> {
        self.colors.iter().flatten().copied().collect()
    }

    /// Grey default color (0.75) for every Gaussian.
    pub fn default_colors(j: usize, k: usize) -> Vec<Vec<Vec3>> {
        vec![vec![Vec3::new(0.75, 0.75, 0.75); k]; j]
    }
}

// On-disk document. Kept separate from the runtime Scene so shape
// validation can produce errors naming the offending field path.
#[derive(Debug, Serialize, Deserialize)]
struct SceneDoc {
    version: u32,
    skeleton: SkeletonDoc,
    body: BodyDoc,
    poses: Vec<Vec<[[f64; 4]; 4]>>,
    cameras: Vec<CameraDoc>,
    light: LightSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    env_map: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ground_plane: Option<GroundPlaneSpec>,
    #[serde(default = "default_gbuffer_source")]
    gbuffer_source: GBufferSource,
    #[serde(default = "default_shadow_bias")]
    shadow_bias: f64,
}

fn default_gbuffer_source() -> GBufferSource {
    GBufferSource::Analytic
}

fn default_shadow_bias() -> f64 {
    DEFAULT_SHADOW_BIAS
}

#[derive(Debug, Serialize, Deserialize)]
struct SkeletonDoc {
    #[serde(rename = "J")]
    j: usize,
    parents: Vec<i32>,
    rest_centers: Vec<[f64; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BodyDoc {
    #[serde(rename = "K")]
    k: usize,
    /// J x K x 13 nested array.
    parameters: Vec<Vec<Vec<f64>>>,
    /// Optional J x K x 3 per-Gaussian albedo; defaults to grey 0.75.
    #[serde(skip_serializing_if = "Option::is_none")]
    colors: Option<Vec<Vec<[f64; 3]>>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CameraDoc {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
    world_to_camera: [[f64; 4]; 4],
}

fn mat4_from_rows(rows: &[[f64; 4]; 4]) -> Mat4 {
    let mut m = Mat4::zeros();
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    m
}

fn mat4_to_rows(m: &Mat4) -> [[f64; 4]; 4] {
    let mut rows = [[0.0; 4]; 4];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    rows
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path)?;
    let doc: SceneDoc = serde_json::from_str(&text)
        .map_err(|e| GscError::schema("<document>", e.to_string()))?;
    let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    scene_from_doc(doc, base_dir)
}

fn scene_from_doc(doc: SceneDoc, base_dir: PathBuf) -> Result<Scene> {
    if doc.version != SCHEMA_VERSION {
        return Err(GscError::schema(
            "version",
            format!("unsupported schema version {} (supported: {SCHEMA_VERSION})", doc.version),
        ));
    }
    let j = doc.skeleton.j;
    if doc.skeleton.parents.len() != j {
        return Err(GscError::schema(
            "skeleton.parents",
            format!("expected {j} entries, found {}", doc.skeleton.parents.len()),
        ));
    }
    if doc.skeleton.rest_centers.len() != j {
        return Err(GscError::schema(
            "skeleton.rest_centers",
            format!("expected {j} entries, found {}", doc.skeleton.rest_centers.len()),
        ));
    }
    let skeleton = Skeleton::new(
        doc.skeleton.parents.clone(),
        doc.skeleton.rest_centers.iter().map(|c| Vec3::from_row_slice(c)).collect(),
    )
    .map_err(|e| GscError::schema("skeleton", e.to_string()))?;

    let k = doc.body.k;
    if doc.body.parameters.len() != j
        || doc.body.parameters.iter().any(|row| row.len() != k)
        || doc
            .body
            .parameters
            .iter()
            .flatten()
            .any(|g| g.len() != PARAMS_PER_GAUSSIAN)
    {
        return Err(GscError::schema(
            "body.parameters",
            format!("expected a {j} x {k} x {PARAMS_PER_GAUSSIAN} array"),
        ));
    }
    let flat: Vec<f64> = doc.body.parameters.iter().flatten().flatten().copied().collect();
    let body = GaussianBody::unpack_parameters(&flat, j, k)
        .map_err(|e| GscError::schema("body.parameters", e.to_string()))?;

    let colors = match &doc.body.colors {
        None => Scene::default_colors(j, k),
        Some(c) => {
            if c.len() != j || c.iter().any(|row| row.len() != k) {
                return Err(GscError::schema(
                    "body.colors",
                    format!("expected a {j} x {k} x 3 array"),
                ));
            }
            c.iter()
                .map(|row| row.iter().map(|v| Vec3::from_row_slice(v)).collect())
                .collect()
        }
    };

    if doc.poses.is_empty() {
        return Err(GscError::schema("poses", "at least one pose frame is required"));
    }
    let mut poses = Vec::with_capacity(doc.poses.len());
    for (t, frame) in doc.poses.iter().enumerate() {
        if frame.len() != j {
            return Err(GscError::schema(
                &format!("poses[{t}]"),
                format!("expected {j} matrices, found {}", frame.len()),
            ));
        }
        let transforms = frame.iter().map(mat4_from_rows).collect();
        poses.push(
            PoseFrame::new(transforms, t)
                .map_err(|e| GscError::schema(&format!("poses[{t}]"), e.to_string()))?,
        );
    }

    if doc.cameras.is_empty() {
        return Err(GscError::schema("cameras", "at least one camera is required"));
    }
    let cameras = doc
        .cameras
        .iter()
        .enumerate()
        .map(|(i, c)| {
            Camera::new(
                c.fx,
                c.fy,
                c.cx,
                c.cy,
                c.width,
                c.height,
                mat4_from_rows(&c.world_to_camera),
            )
            .map_err(|e| GscError::schema(&format!("cameras[{i}]"), e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;

    doc.light
        .to_light()
        .map_err(|e| GscError::schema("light", e.to_string()))?;

    let env_map = match &doc.env_map {
        None => None,
        Some(rel) => Some(
            EnvironmentMap::from_pfm(&base_dir.join(rel))
                .map_err(|e| GscError::schema("env_map", e.to_string()))?,
        ),
    };

    let ground_image = match &doc.ground_plane {
        Some(GroundPlaneSpec { background: BackgroundSpec::Image(rel), .. }) => Some(
            crate::pfm::read_pfm_rgb(&base_dir.join(rel))
                .map_err(|e| GscError::schema("ground_plane.background", e.to_string()))?,
        ),
        _ => None,
    };
    if let Some(spec) = &doc.ground_plane {
        GroundPlane::new(
            Vec3::from_row_slice(&spec.point),
            Vec3::from_row_slice(&spec.normal),
            Background::Color(Vec3::zeros()),
        )
        .map_err(|e| GscError::schema("ground_plane", e.to_string()))?;
    }

    if let GBufferSource::Files { albedo, normal, depth, mask } = &doc.gbuffer_source {
        for (field, rel) in [
            ("gbuffer_source.albedo", albedo),
            ("gbuffer_source.normal", normal),
            ("gbuffer_source.depth", depth),
            ("gbuffer_source.mask", mask),
        ] {
            if !base_dir.join(rel).exists() {
                return Err(GscError::schema(field, format!("file not found: {rel}")));
            }
        }
    }

    Ok(Scene {
        skeleton,
        body,
        colors,
        poses,
        cameras,
        light: doc.light,
        env_map,
        env_map_path: doc.env_map,
        ground_plane: doc.ground_plane,
        ground_image,
        gbuffer_source: doc.gbuffer_source,
        base_dir,
        shadow_bias: doc.shadow_bias,
    })
}

/// Writes the scene JSON; a held environment map is written to its sidecar
/// path next to the scene file.
pub fn save_scene(scene: &Scene, path: &Path) -> Result<()> {
    let j = scene.skeleton.joint_count();
    let k = scene.body.k();
    let params = scene.body.pack_parameters();
    let parameters: Vec<Vec<Vec<f64>>> = (0..j)
        .map(|jj| {
            (0..k)
                .map(|kk| {
                    let o = (jj * k + kk) * PARAMS_PER_GAUSSIAN;
                    params[o..o + PARAMS_PER_GAUSSIAN].to_vec()
                })
                .collect()
        })
        .collect();
    let doc = SceneDoc {
        version: SCHEMA_VERSION,
        skeleton: SkeletonDoc {
            j,
            parents: scene.skeleton.parent.clone(),
            rest_centers: scene.skeleton.rest_centers.iter().map(|c| [c.x, c.y, c.z]).collect(),
        },
        body: BodyDoc {
            k,
            parameters,
            colors: Some(
                scene
                    .colors
                    .iter()
                    .map(|row| row.iter().map(|c| [c.x, c.y, c.z]).collect())
                    .collect(),
            ),
        },
        poses: scene
            .poses
            .iter()
            .map(|p| p.transforms.iter().map(mat4_to_rows).collect())
            .collect(),
        cameras: scene
            .cameras
            .iter()
            .map(|c| CameraDoc {
                fx: c.fx,
                fy: c.fy,
                cx: c.cx,
                cy: c.cy,
                width: c.width,
                height: c.height,
                world_to_camera: mat4_to_rows(&c.world_to_camera),
            })
            .collect(),
        light: scene.light.clone(),
        env_map: scene.env_map_path.clone(),
        ground_plane: scene.ground_plane.clone(),
        gbuffer_source: scene.gbuffer_source.clone(),
        shadow_bias: scene.shadow_bias,
    };
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| GscError::schema("<document>", e.to_string()))?;
    std::fs::write(path, text)?;

    if let (Some(env), Some(rel)) = (&scene.env_map, &scene.env_map_path) {
        let target = path.parent().unwrap_or(Path::new(".")).join(rel);
        crate::pfm::write_pfm_rgb(&env.image, &target)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::AnisoGaussian;

    fn minimal_scene() -> Scene {
        let skeleton = Skeleton::new(vec![-1], vec![Vec3::new(0.0, 0.0, 1.0)]).unwrap();
        let g = AnisoGaussian::isotropic(Vec3::zeros(), 0.1, 1.0).unwrap();
        let body = GaussianBody::new(vec![vec![g]]).unwrap();
        let cam = Camera::centered(
            32.0,
            32,
            32,
            Camera::look_at(Vec3::new(0.0, -2.0, 1.0), Vec3::new(0.0, 0.0, 1.0), Vec3::z())
                .unwrap(),
        )
        .unwrap();
        Scene {
            skeleton,
            body,
            colors: Scene::default_colors(1, 1),
            poses: vec![PoseFrame::identity(1, 0)],
            cameras: vec![cam],
            light: LightSpec {
                azimuth: 0.3,
                elevation: 0.8,
                ambient: [0.1, 0.1, 0.1],
                color: [1.5, 1.5, 1.5],
            },
            env_map: None,
            env_map_path: None,
            ground_plane: Some(GroundPlaneSpec {
                point: [0.0, 0.0, 0.0],
                normal: [0.0, 0.0, 1.0],
                background: BackgroundSpec::Color([0.3, 0.3, 0.3]),
            }),
            ground_image: None,
            gbuffer_source: GBufferSource::Analytic,
            base_dir: PathBuf::from("."),
            shadow_bias: DEFAULT_SHADOW_BIAS,
        }
    }

    #[test]
    fn round_trip_preserves_scene() {
        let scene = minimal_scene();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.json");
        save_scene(&scene, &path).unwrap();
        let back = load_scene(&path).unwrap();
        assert_eq!(back.skeleton, scene.skeleton);
        assert_eq!(back.body, scene.body);
        assert_eq!(back.colors, scene.colors);
        assert_eq!(back.light, scene.light);
        assert_eq!(back.ground_plane, scene.ground_plane);
        assert_eq!(back.poses[0].transforms, scene.poses[0].transforms);
        assert_eq!(back.cameras[0], scene.cameras[0]);
        assert_eq!(back.shadow_bias, scene.shadow_bias);
    }

    #[test]
    fn wrong_parameter_shape_names_field_path() {
        let scene = minimal_scene();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.json");
        save_scene(&scene, &path).unwrap();
        let mut doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        // Truncate one Gaussian's parameter list.
        doc["body"]["parameters"][0][0] = serde_json::json!([1.0, 2.0, 3.0]);
        std::fs::write(&path, doc.to_string()).unwrap();
        let err = load_scene(&path).unwrap_err();
        match err {
            GscError::Schema { field, .. } => assert_eq!(field, "body.parameters"),
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn unknown_version_is_rejected() {
        let scene = minimal_scene();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.json");
        save_scene(&scene, &path).unwrap();
        let mut doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        doc["version"] = serde_json::json!(99);
        std::fs::write(&path, doc.to_string()).unwrap();
        let err = load_scene(&path).unwrap_err();
        match err {
            GscError::Schema { field, .. } => assert_eq!(field, "version"),
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn missing_referenced_file_is_rejected() {
        let mut scene = minimal_scene();
        scene.gbuffer_source = GBufferSource::Files {
            albedo: "missing/albedo.pfm".into(),
            normal: "missing/normal.pfm".into(),
            depth: "missing/depth.pfm".into(),
            mask: "missing/mask.pfm".into(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.json");
        save_scene(&scene, &path).unwrap();
        let err = load_scene(&path).unwrap_err();
        assert!(matches!(err, GscError::Schema { .. }));
    }

    #[test]
    fn env_map_sidecar_round_trips() {
        let mut scene = minimal_scene();
        let env = EnvironmentMap::constant(8, 4, Vec3::new(0.5, 0.6, 0.7)).unwrap();
        scene.env_map = Some(env);
        scene.env_map_path = Some("env.pfm".into());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.json");
        save_scene(&scene, &path).unwrap();
        assert!(dir.path().join("env.pfm").exists());
        let back = load_scene(&path).unwrap();
        let env = back.env_map.unwrap();
        assert_eq!(env.image.width, 8);
        // Sidecar PFM stores f32, so compare at single precision.
        assert!((env.image.get(3, 2) - Vec3::new(0.5, 0.6, 0.7)).abs().max() < 1e-7);
    }
}
