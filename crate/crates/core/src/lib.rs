//! Analytic shadow casting for articulated characters modeled as sums of
//! anisotropic 3D Gaussians.
//!
//! The character's volumetric density is a set of Gaussians rigidly attached
//! to a skeleton. A ray through a 3D Gaussian induces a 1D Gaussian in the
//! ray parameter, so the optical depth of a shadow ray is a closed-form
//! `erf` expression and needs no sampling. On top of that kernel sit a
//! deferred Lambertian shader with shadow maps and ground shadows, HDRi
//! relighting, a density fitter for the body parameters, a light-direction
//! solver, and brute-force oracles for validating all of it.

pub mod bench;
pub mod body;
pub mod camera;
pub mod demo;
pub mod envmap;
pub mod error;
pub mod field;
pub mod fit;
pub mod gaussian;
pub mod gbuffer;
pub mod img;
pub mod light;
pub mod math;
pub mod metrics;
pub mod oracle;
pub mod pfm;
pub mod render;
pub mod scene;
pub mod shading;

pub use error::{GscError, Result};
