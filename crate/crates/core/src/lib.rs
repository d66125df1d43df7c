//! Real-time densification of sparse, multi-frame LiDAR depth guided by an RGB image.
//!
//! The crate is organized as the stages of a per-viewpoint pipeline:
//!
//! - [`geometry`]: pinhole camera, point clouds, projection into a sparse depth raster.
//! - [`preprocess`]: motion-afterimage and occluded-point removal on the sparse raster.
//! - [`densify`]: the joint bilateral filter (tensor form and reference form) and the
//!   coarse-to-fine two-stage schedule.
//! - [`postprocess`]: depth-gradient contour suppression and multi-view overlay.
//! - [`harness`]: synthetic scenes, the end-to-end pipeline driver and the latency bench.
//!
//! Per-pixel loops run on rayon when the `parallel` feature is enabled (the default)
//! and the current pool has more than one thread; otherwise they run sequentially.

pub mod config;
pub mod densify;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod image;
pub mod io;
pub mod par;
pub mod postprocess;
pub mod preprocess;
pub mod raster;

pub use config::PipelineConfig;
pub use densify::{
    jbf_densify, jbf_reference, two_stage_densify, DenseDepthMap, FilterParams, WeightVolume,
};
pub use error::{Error, Result};
pub use geometry::{CameraModel, SparseDepthMap, TimedPointCloud};
pub use image::RgbImage;
pub use raster::Raster;
