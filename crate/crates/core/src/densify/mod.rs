//! Joint bilateral depth densification.
//!
//! The filter runs as three tensor phases over a `(2r+1)²`-plane weight volume:
//! color weights (a convolution-like difference against each neighbor offset followed by
//! the color Gaussian), a per-offset spatial Gaussian (Hadamard product), and a transpose
//! convolution that spreads every sample's depth and validity bit to its neighbors using
//! the weights anchored at the sample. A final pass divides by the accumulated weight.
//!
//! [`jbf_reference`] evaluates the same function as a direct per-pixel gather in `f64`
//! and is kept as the oracle for the tensor form.

mod reference;
mod scatter;
mod two_stage;
mod weights;

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::geometry::SparseDepthMap;
use crate::image::RgbImage;
use crate::raster::{check_dims, Raster};

pub use reference::jbf_reference;
pub use scatter::{accumulate, normalize, scatter_normalize, Accumulator};
pub use two_stage::{
    downsample_sparse, two_stage_densify, two_stage_densify_timed, upsample_inject,
    TwoStageTimings,
};
pub use weights::{apply_spatial, color_weights, offset_index, spatial_weight, WeightVolume};

/// Accumulated weight at or below which an output pixel is left invalid.
pub const DEFAULT_W_MIN: f32 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    /// Neighborhood radius; the window is `(2r+1)²` pixels.
    pub r: usize,
    /// Color Gaussian scale, in RGB distance on the [0, 255] scale.
    pub sigma_c: f32,
    /// Spatial Gaussian scale, in pixels.
    pub sigma_p: f32,
    /// Normalization floor.
    pub w_min: f32,
}

impl FilterParams {
    /// Parameters with the default normalization floor.
    pub fn new(r: usize, sigma_c: f32, sigma_p: f32) -> Result<Self> {
        let p = Self {
            r,
            sigma_c,
            sigma_p,
            w_min: DEFAULT_W_MIN,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_w_min(mut self, w_min: f32) -> Result<Self> {
        self.w_min = w_min;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 1 {
            return Err(Error::config("filter radius must be at least 1"));
        }
        if !(self.sigma_c > 0.0 && self.sigma_p > 0.0) {
            return Err(Error::config("sigma_c and sigma_p must be positive"));
        }
        if !(self.w_min > 0.0 && self.w_min.is_finite()) {
            return Err(Error::config("w_min must be positive and finite"));
        }
        Ok(())
    }
}

/// Densified depth `D̂` with its accumulated normalization weight `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseDepthMap {
    depth: Raster<f32>,
    weight: Raster<f32>,
    valid: Raster<u8>,
}

impl DenseDepthMap {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            depth: Raster::filled(width, height, 0.0),
            weight: Raster::filled(width, height, 0.0),
            valid: Raster::filled(width, height, 0),
        }
    }

    /// Builds a map from depth values; every positive finite value counts as valid with
    /// unit weight.
    pub fn from_depth(depth: Raster<f32>) -> Self {
        let valid = depth.map(|&d| u8::from(d.is_finite() && d > 0.0));
        let depth = Raster::from_fn(depth.width(), depth.height(), |x, y| {
            if *valid.get(x, y) != 0 {
                *depth.get(x, y)
            } else {
                0.0
            }
        });
        let weight = valid.map(|&v| v as f32);
        Self {
            depth,
            weight,
            valid,
        }
    }

    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.depth.dims()
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        *self.valid.get(x, y) != 0
    }

    #[inline]
    pub fn depth_at(&self, x: usize, y: usize) -> f32 {
        *self.depth.get(x, y)
    }

    #[inline]
    pub fn weight_at(&self, x: usize, y: usize) -> f32 {
        *self.weight.get(x, y)
    }

    pub fn depth(&self) -> &Raster<f32> {
        &self.depth
    }

    pub fn weight(&self) -> &Raster<f32> {
        &self.weight
    }

    pub fn valid(&self) -> &Raster<u8> {
        &self.valid
    }

    /// Marks a pixel invalid, resetting its depth to the sentinel.
    pub fn invalidate(&mut self, x: usize, y: usize) {
        *self.valid.get_mut(x, y) = 0;
        *self.depth.get_mut(x, y) = 0.0;
    }

    pub fn valid_count(&self) -> usize {
        self.valid.as_slice().iter().filter(|&&v| v != 0).count()
    }

    /// Fraction of pixels that are valid.
    pub fn density(&self) -> f64 {
        if self.valid.is_empty() {
            0.0
        } else {
            self.valid_count() as f64 / self.valid.len() as f64
        }
    }

    pub(crate) fn from_parts(depth: Raster<f32>, weight: Raster<f32>, valid: Raster<u8>) -> Self {
        Self {
            depth,
            weight,
            valid,
        }
    }
}

/// Wall-clock time spent in each phase of one filter pass.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimings {
    pub weights: Duration,
    pub spatial: Duration,
    pub scatter: Duration,
    pub normalize: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.weights + self.spatial + self.scatter + self.normalize
    }
}

/// Joint bilateral densification of `sparse` guided by `guide`.
pub fn jbf_densify(
    guide: &RgbImage,
    sparse: &SparseDepthMap,
    p: &FilterParams,
) -> Result<DenseDepthMap> {
    jbf_densify_timed(guide, sparse, p).map(|(dense, _)| dense)
}

/// [`jbf_densify`] with per-phase timings.
pub fn jbf_densify_timed(
    guide: &RgbImage,
    sparse: &SparseDepthMap,
    p: &FilterParams,
) -> Result<(DenseDepthMap, PhaseTimings)> {
    p.validate()?;
    check_dims("sparse depth", sparse.dims(), guide.dims())?;
    let mut t = PhaseTimings::default();

    let start = Instant::now();
    let mut w = color_weights(guide, p.r, p.sigma_c);
    t.weights = start.elapsed();

    let start = Instant::now();
    apply_spatial(&mut w, p.sigma_p);
    t.spatial = start.elapsed();

    let start = Instant::now();
    let acc = accumulate(sparse, &w)?;
    t.scatter = start.elapsed();

    let start = Instant::now();
    let dense = normalize(acc, p.w_min);
    t.normalize = start.elapsed();

    Ok((dense, t))
}
