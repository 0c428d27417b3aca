//! Radar-camera depth toolkit.
//!
//! The crate covers the non-learned half of a radar-augmented monocular depth
//! pipeline:
//!
//! - [`geometry`]: pinhole projection, rigid transforms, depth rasters.
//! - [`radar`]: multi-frame accumulation, height extension, ratio filtering and
//!   intrinsic error of sparse radar depth.
//! - [`interp`]: guidance-weighted dense interpolation of sparse depth seeds.
//! - [`ordinal`]: spacing-increasing discretization, ordinal labels, the
//!   ordinal regression loss and its gradient.
//! - [`metrics`]: masked depth evaluation (δ thresholds, RMSE, AbsRel).
//! - [`synth`]: deterministic synthetic street scenes with lidar- and
//!   radar-like sensors.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod interp;
pub mod metrics;
pub mod ordinal;
pub mod radar;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{CameraIntrinsics, DepthMap, PointAttributes, PointCloud, RigidTransform};
