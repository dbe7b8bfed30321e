//! Global rigid symmetry detection for shapes given as scalar voxel volumes.
//!
//! A shape is the 1/2-sub-level set of a function `s: R³ → [0, 1]` sampled on
//! a voxel grid. Candidate orthogonal transforms are scored by their
//! distortion, the mean of `|s(x) - s(Rx)|` over the support ball, estimated
//! by Monte-Carlo sampling over a covering net of O(3).
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detector;
pub mod distortion;
pub mod error;
pub mod linalg;
pub mod ogroup;
pub mod rng;
pub mod scalar;
pub mod shapes;
pub mod volume;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Volume = volume::ScalarVolume<f64>;
pub type Volume32 = volume::ScalarVolume<f32>;
pub type Shape = volume::ShapeRepresentation<f64>;
pub type Shape32 = volume::ShapeRepresentation<f32>;
pub type Transform = ogroup::OrthoTransform<f64>;
pub type Net = ogroup::TransformNet<f64>;
pub type Config = detector::DetectionConfig;
pub type Report = detector::DetectionReport;
pub type Mesh = shapes::TriangleMesh<f64>;
