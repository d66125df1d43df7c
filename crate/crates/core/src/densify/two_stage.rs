use std::time::{Duration, Instant};

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::geometry::SparseDepthMap;
use crate::image::RgbImage;
use crate::raster::check_dims;

use super::{jbf_densify_timed, DenseDepthMap, PhaseTimings};

/// Min-pools valid depths over `factor×factor` blocks; the output is
/// `⌈w/factor⌉×⌈h/factor⌉` and each cell keeps the winning pixel's frame index.
pub fn downsample_sparse(sparse: &SparseDepthMap, factor: usize) -> SparseDepthMap {
    let factor = factor.max(1);
    if factor == 1 {
        return sparse.clone();
    }
    let (w, h) = sparse.dims();
    let (cw, ch) = (w.div_ceil(factor), h.div_ceil(factor));
    let mut out = SparseDepthMap::empty(cw, ch);
    for (x, y, d, f) in sparse.samples() {
        let (cx, cy) = (x / factor, y / factor);
        if !out.is_valid(cx, cy) || d < out.depth_at(cx, cy) {
            out.set(cx, cy, d, f);
        }
    }
    out
}

/// Nearest-neighbor upsample of the coarse estimate to the original resolution, with the
/// original samples written back over it.
///
/// Upsampled pixels take the newest frame index present in `original` (0 if it is empty).
pub fn upsample_inject(
    coarse: &DenseDepthMap,
    original: &SparseDepthMap,
    factor: usize,
) -> Result<SparseDepthMap> {
    let factor = factor.max(1);
    let (w, h) = original.dims();
    check_dims(
        "coarse depth",
        coarse.dims(),
        (w.div_ceil(factor), h.div_ceil(factor)),
    )?;
    let fill_frame = original.max_frame_index().unwrap_or(0);
    let mut out = SparseDepthMap::empty(w, h);
    for y in 0..h {
        let cy = y / factor;
        for x in 0..w {
            if original.is_valid(x, y) {
                out.set(x, y, original.depth_at(x, y), original.frame_at(x, y));
            } else if coarse.is_valid(x / factor, cy) {
                out.set(x, y, coarse.depth_at(x / factor, cy), fill_frame);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TwoStageTimings {
    pub downsample: Duration,
    pub stage1: PhaseTimings,
    pub upsample: Duration,
    pub stage2: PhaseTimings,
    pub total: Duration,
}

impl TwoStageTimings {
    /// Time inside the filter phases of both stages.
    pub fn filter_phases(&self) -> Duration {
        self.stage1.total() + self.stage2.total()
    }
}

/// Coarse pass on a `downsample_factor`-reduced raster, then a full-resolution pass on the
/// upsampled coarse estimate with the original samples re-injected.
pub fn two_stage_densify(
    guide: &RgbImage,
    sparse: &SparseDepthMap,
    cfg: &PipelineConfig,
) -> Result<DenseDepthMap> {
    two_stage_densify_timed(guide, sparse, cfg).map(|(d, _)| d)
}

pub fn two_stage_densify_timed(
    guide: &RgbImage,
    sparse: &SparseDepthMap,
    cfg: &PipelineConfig,
) -> Result<(DenseDepthMap, TwoStageTimings)> {
    cfg.validate()?;
    check_dims("sparse depth", sparse.dims(), guide.dims())?;
    let total = Instant::now();
    let mut t = TwoStageTimings::default();
    let factor = cfg.downsample_factor;

    let start = Instant::now();
    let small_guide = guide.downsample_mean(factor);
    let small_sparse = downsample_sparse(sparse, factor);
    t.downsample = start.elapsed();

    let (coarse, stage1) = jbf_densify_timed(&small_guide, &small_sparse, &cfg.stage1_params())?;
    t.stage1 = stage1;

    let start = Instant::now();
    let restored = upsample_inject(&coarse, sparse, factor)?;
    t.upsample = start.elapsed();

    let (dense, stage2) = jbf_densify_timed(guide, &restored, &cfg.stage2_params())?;
    t.stage2 = stage2;
    t.total = total.elapsed();
    Ok((dense, t))
}
