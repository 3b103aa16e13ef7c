//! The bundled demo scene: a 16-joint stick figure with 4 Gaussians per
//! joint (64 total), three poses, one camera, a directional light, a ground
//! plane, and a small procedural sky with a single bright sun texel. Small
//! enough that every end-to-end check runs in seconds.

use crate::body::{GaussianBody, PoseFrame, Skeleton};
use crate::camera::Camera;
use crate::envmap::EnvironmentMap;
use crate::error::Result;
use crate::gaussian::{rot6_from_rotation, AnisoGaussian};
use crate::img::ImageRgb;
use crate::math::{compose_rigid, direction_from_angles, Mat3, Mat4, Vec3};
use crate::scene::{BackgroundSpec, GBufferSource, GroundPlaneSpec, LightSpec, Scene};
use crate::shading::DEFAULT_SHADOW_BIAS;

pub const DEMO_LIGHT_AZIMUTH: f64 = 2.2;
pub const DEMO_LIGHT_ELEVATION: f64 = 0.9;

/// Joint order: pelvis, spine, chest, head, then left arm (shoulder, elbow,
/// wrist), right arm, left leg (hip, knee, ankle), right leg.
pub fn demo_skeleton() -> Skeleton {
    let parents = vec![-1, 0, 1, 2, 2, 4, 5, 2, 7, 8, 0, 10, 11, 0, 13, 14];
    let rest = vec![
        Vec3::new(0.00, 0.0, 0.95),  // 0 pelvis
        Vec3::new(0.00, 0.0, 1.15),  // 1 spine
        Vec3::new(0.00, 0.0, 1.35),  // 2 chest
        Vec3::new(0.00, 0.0, 1.62),  // 3 head
        Vec3::new(0.18, 0.0, 1.45),  // 4 L shoulder
        Vec3::new(0.45, 0.0, 1.45),  // 5 L elbow
        Vec3::new(0.70, 0.0, 1.45),  // 6 L wrist
        Vec3::new(-0.18, 0.0, 1.45), // 7 R shoulder
        Vec3::new(-0.45, 0.0, 1.45), // 8 R elbow
        Vec3::new(-0.70, 0.0, 1.45), // 9 R wrist
        Vec3::new(0.10, 0.0, 0.90),  // 10 L hip
        Vec3::new(0.10, 0.0, 0.50),  // 11 L knee
        Vec3::new(0.10, 0.0, 0.10),  // 12 L ankle
        Vec3::new(-0.10, 0.0, 0.90), // 13 R hip
        Vec3::new(-0.10, 0.0, 0.50), // 14 R knee
        Vec3::new(-0.10, 0.0, 0.10), // 15 R ankle
    ];
    Skeleton::new(parents, rest).expect("demo skeleton is a valid tree")
}

fn rot_x(a: f64) -> Mat3 {
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::x_axis(), a).into_inner()
}

fn rot_y(a: f64) -> Mat3 {
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::y_axis(), a).into_inner()
}

fn rot_z(a: f64) -> Mat3 {
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::z_axis(), a).into_inner()
}

/// Forward kinematics: per-joint local rotations (about the joint's rest
/// position) composed down the tree into local-to-world transforms. Parent
/// indices precede children in the demo skeleton.
pub fn forward_kinematics(
    skeleton: &Skeleton,
    local_rotations: &[Mat3],
    timestamp: usize,
) -> Result<PoseFrame> {
    let j = skeleton.joint_count();
    let mut world = vec![Mat4::identity(); j];
    for i in 0..j {
        let parent = skeleton.parent[i];
        let offset = if parent < 0 {
            skeleton.rest_centers[i]
        } else {
            skeleton.rest_centers[i] - skeleton.rest_centers[parent as usize]
        };
        let local = compose_rigid(&local_rotations[i], &offset);
        world[i] = if parent < 0 {
            local
        } else {
            world[parent as usize] * local
        };
    }
    PoseFrame::new(world, timestamp)
}

fn demo_poses(skeleton: &Skeleton) -> Vec<PoseFrame> {
    let j = skeleton.joint_count();
    let identity = vec![Mat3::identity(); j];

    // Frame 1: left arm raised, right leg stepping forward.
    let mut frame1 = identity.clone();
    frame1[4] = rot_y(-1.0);
    frame1[5] = rot_y(-0.35);
    frame1[13] = rot_x(0.5);
    frame1[14] = rot_x(-0.3);

    // Frame 2: torso twist, right arm swung forward, left leg back.
    let mut frame2 = identity.clone();
    frame2[1] = rot_z(0.35);
    frame2[7] = rot_z(0.7);
    frame2[8] = rot_z(0.25);
    frame2[10] = rot_x(-0.4);

    vec![
        forward_kinematics(skeleton, &identity, 0).expect("rest pose"),
        forward_kinematics(skeleton, &frame1, 1).expect("pose 1"),
        forward_kinematics(skeleton, &frame2, 2).expect("pose 2"),
    ]
}

/// rot6 whose first axis is `dir` (the remaining axes are an arbitrary
/// orthonormal complement).
fn rot6_along(dir: &Vec3) -> [f64; 6] {
    let d = dir.normalize();
    let helper = if d.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let p = (helper - d * helper.dot(&d)).normalize();
    let q = d.cross(&p);
    rot6_from_rotation(&Mat3::from_rows(&[d.transpose(), p.transpose(), q.transpose()]))
}

// Cross-bone sigma and albedo per joint (bones are joint -> first child).
fn bone_style(joint: usize) -> (f64, Vec3) {
    match joint {
        0 | 1 => (0.095, Vec3::new(0.55, 0.56, 0.62)), // torso
        2 => (0.070, Vec3::new(0.55, 0.56, 0.62)),     // chest to head
        3 => (0.090, Vec3::new(0.80, 0.65, 0.55)),     // head blob
        4 | 5 | 7 | 8 => (0.045, Vec3::new(0.72, 0.43, 0.38)), // arms
        6 | 9 => (0.040, Vec3::new(0.80, 0.65, 0.55)), // hands
        10 | 11 | 13 | 14 => (0.060, Vec3::new(0.35, 0.40, 0.62)), // legs
        _ => (0.045, Vec3::new(0.35, 0.40, 0.62)),     // feet
    }
}

/// K Gaussians per joint along each bone in the rest pose, with mild
/// anisotropy along the bone; leaf joints get a single repeated blob.
pub fn demo_body(skeleton: &Skeleton, k: usize) -> (GaussianBody, Vec<Vec<Vec3>>) {
    let amplitude = 8.0;
    let mut gaussians = Vec::with_capacity(skeleton.joint_count());
    let mut colors = Vec::with_capacity(skeleton.joint_count());
    for j in 0..skeleton.joint_count() {
        let (across, color) = bone_style(j);
        let mut row = Vec::with_capacity(k);
        match skeleton.first_child(j) {
            Some(c) => {
                // Local frame sits at the joint; the bone runs to the child.
                let bone = skeleton.rest_centers[c] - skeleton.rest_centers[j];
                let len = bone.norm();
                let along = (len * 0.55 / k as f64).max(across * 0.6);
                for i in 0..k {
                    let t = (i as f64 + 0.5) / k as f64;
                    row.push(
                        AnisoGaussian::new(
                            bone * t,
                            Vec3::new(along, across, across),
                            rot6_along(&bone),
                            amplitude,
                        )
                        .expect("demo bone Gaussian"),
                    );
                }
            }
            None => {
                for _ in 0..k {
                    row.push(
                        AnisoGaussian::isotropic(Vec3::zeros(), across, amplitude / k as f64)
                            .expect("demo leaf Gaussian"),
                    );
                }
            }
        }
        colors.push(vec![color; k]);
        gaussians.push(row);
    }
    (GaussianBody::new(gaussians).expect("demo body"), colors)
}

/// Gradient sky with a ground hemisphere and one bright sun texel at the
/// demo light direction.
pub fn demo_environment(width: usize, height: usize) -> EnvironmentMap {
    let mut img = ImageRgb::filled(width, height, Vec3::zeros());
    // Directions are recovered per texel through the same mapping the
    // environment map uses for lookups.
    let probe = EnvironmentMap::constant(width, height, Vec3::new(1.0, 1.0, 1.0))
        .expect("probe map");
    for y in 0..height {
        for x in 0..width {
            let d = probe.texel_direction(x, y);
            let c = if d.z >= 0.0 {
                let zenith = Vec3::new(0.27, 0.49, 0.90);
                let horizon = Vec3::new(0.59, 0.49, 0.39);
                horizon + (zenith - horizon) * d.z
            } else {
                Vec3::new(0.13, 0.12, 0.11)
            };
            img.set(x, y, c);
        }
    }
    let sun_dir = direction_from_angles(DEMO_LIGHT_AZIMUTH, DEMO_LIGHT_ELEVATION);
    let (sx, sy) = probe.texel_of(&sun_dir);
    img.set(sx, sy, Vec3::new(900.0, 840.0, 760.0));
    EnvironmentMap::new(img).expect("demo environment")
}

/// The full bundled scene.
pub fn demo_scene() -> Scene {
    let skeleton = demo_skeleton();
    let poses = demo_poses(&skeleton);
    let (body, colors) = demo_body(&skeleton, 4);
    let camera = Camera::centered(
        110.0,
        96,
        96,
        Camera::look_at(
            Vec3::new(0.5, -3.3, 1.5),
            Vec3::new(0.0, 0.0, 0.9),
            Vec3::z(),
        )
        .expect("demo camera"),
    )
    .expect("demo camera intrinsics");

    Scene {
        skeleton,
        body,
        colors,
        poses,
        cameras: vec![camera],
        light: LightSpec {
            azimuth: DEMO_LIGHT_AZIMUTH,
            elevation: DEMO_LIGHT_ELEVATION,
            ambient: [0.1, 0.1, 0.1],
            color: [1.5, 1.5, 1.5],
        },
        env_map: Some(demo_environment(64, 32)),
        env_map_path: Some("demo_env.pfm".into()),
        ground_plane: Some(GroundPlaneSpec {
            point: [0.0, 0.0, 0.0],
            normal: [0.0, 0.0, 1.0],
            background: BackgroundSpec::Color([0.32, 0.30, 0.27]),
        }),
        ground_image: None,
        gbuffer_source: GBufferSource::Analytic,
        base_dir: std::path::PathBuf::from("."),
        shadow_bias: DEFAULT_SHADOW_BIAS,
    }
}
