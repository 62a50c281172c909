//! Camera-centric multi-person 3D pose lifting from tracked 2D keypoints.
//!
//! The library turns per-person 2D joint observations (with heatmap and
//! part-affinity confidences) into camera-centric 3D poses:
//!
//! 1. confidence-weighted directed graph networks over joints and bones
//!    complete a person-centric 3D pose per frame ([`gcn`]),
//! 2. temporal convolutional networks refine poses over a window, estimate
//!    root velocity, and classify relative depth Z/f over bins ([`tcn`]),
//! 3. weak-perspective geometry back-projects the root into camera space
//!    ([`camera`]),
//! 4. occlusion-aware fusion blends the depth and velocity root paths
//!    ([`fusion`], [`pipeline`]).
//!
//! Everything runs on a small self-contained differentiable core
//! ([`diffcore`]) and trains on a built-in synthetic motion generator
//! ([`synthgen`]), so the whole pipeline is verifiable on a desktop CPU.
//! See the `examples/` directory for one runnable program per capability.

pub mod camera;
pub mod diffcore;
pub mod error;
pub mod fusion;
pub mod gcn;
pub mod io;
pub mod metrics;
pub mod parallel;
pub mod pipeline;
pub mod pose;
pub mod skeleton;
pub mod synthgen;
pub mod tcn;
pub mod train;

pub use error::{Error, Result};
