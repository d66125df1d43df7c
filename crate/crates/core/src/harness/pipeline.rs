use std::time::{Duration, Instant};

use serde::Serialize;

use super::render::{render_scene, FrameBundle, ViewFrame};
use super::scene::SceneSpec;
use crate::config::PipelineConfig;
use crate::densify::{two_stage_densify, DenseDepthMap};
use crate::error::Result;
use crate::geometry::{merge_frames, project_points, unproject_depth, TimedPointCloud};
use crate::par;
use crate::postprocess::{contour_filter, fuse_views};
use crate::preprocess::preprocess;

/// Fused points farther than this from every true surface count as ghosts.
pub const GHOST_DISTANCE_M: f64 = 0.2;

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Per-stage wall-clock milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StageMs {
    pub merge_project: f64,
    pub preprocess: f64,
    pub densify: f64,
    pub contour: f64,
    pub unproject: f64,
}

impl StageMs {
    fn max(self, o: StageMs) -> StageMs {
        StageMs {
            merge_project: self.merge_project.max(o.merge_project),
            preprocess: self.preprocess.max(o.preprocess),
            densify: self.densify.max(o.densify),
            contour: self.contour.max(o.contour),
            unproject: self.unproject.max(o.unproject),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViewMetrics {
    pub view: usize,
    pub lidar_points: usize,
    pub sparse_samples: usize,
    pub clean_samples: usize,
    pub dense_pixels: usize,
    pub density: f64,
    pub mae_m: f64,
    pub rmse_m: f64,
    pub points: usize,
    pub stages_ms: StageMs,
}

/// One JSON-lines record per processed frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameMetrics {
    pub frame: i64,
    pub t: f64,
    pub render_ms: f64,
    /// Slowest viewpoint per stage; viewpoints run concurrently.
    pub stages_ms: StageMs,
    pub fuse_ms: f64,
    pub total_ms: f64,
    /// Absolute depth error over valid pixels with ground truth, pooled over viewpoints.
    pub mae_m: f64,
    pub rmse_m: f64,
    /// Valid output pixels over all pixels, pooled over viewpoints.
    pub density: f64,
    pub lidar_points: usize,
    pub sparse_samples: usize,
    pub fused_points: usize,
    pub ghost_points: usize,
    pub views: Vec<ViewMetrics>,
}

#[derive(Clone, Debug)]
pub struct ViewOutput {
    pub dense: DenseDepthMap,
    pub cloud: TimedPointCloud,
    pub metrics: ViewMetrics,
    err_sum: f64,
    err_sq_sum: f64,
    err_count: usize,
}

#[derive(Clone, Debug)]
pub struct FrameOutput {
    pub bundle: FrameBundle,
    pub views: Vec<ViewOutput>,
    pub fused: TimedPointCloud,
    pub metrics: FrameMetrics,
}

#[derive(Clone, Debug)]
pub struct PipelineReport {
    pub frames: Vec<FrameMetrics>,
    /// Output of the last processed frame.
    pub last: Option<FrameOutput>,
}

fn process_view(view: usize, frame: &ViewFrame, tick: i64, cfg: &PipelineConfig) -> Result<ViewOutput> {
    let cam = &frame.camera;
    let mut stages = StageMs::default();

    let start = Instant::now();
    let merged = merge_frames(&frame.lidar_frames)?;
    let sparse = project_points(&merged, cam);
    stages.merge_project = ms(start.elapsed());

    let start = Instant::now();
    let clean = preprocess(&sparse, &frame.prev_rgb, &frame.rgb, cfg)?;
    stages.preprocess = ms(start.elapsed());

    let start = Instant::now();
    let mut dense = two_stage_densify(&frame.rgb, &clean, cfg)?;
    stages.densify = ms(start.elapsed());

    let start = Instant::now();
    if cfg.contour_filter {
        dense = contour_filter(&dense, cfg.grad_thresh);
    }
    stages.contour = ms(start.elapsed());

    let start = Instant::now();
    let cloud = unproject_depth(&dense, &frame.rgb, cam)?.with_tags(tick as i32, view as i32);
    stages.unproject = ms(start.elapsed());

    let (mut err_sum, mut err_sq_sum, mut err_count) = (0.0f64, 0.0f64, 0usize);
    for (i, &gt) in frame.gt_depth.as_slice().iter().enumerate() {
        if gt > 0.0 && dense.valid().as_slice()[i] != 0 {
            let e = (dense.depth().as_slice()[i] - gt) as f64;
            err_sum += e.abs();
            err_sq_sum += e * e;
            err_count += 1;
        }
    }
    let n = err_count.max(1) as f64;
    let metrics = ViewMetrics {
        view,
        lidar_points: merged.len(),
        sparse_samples: sparse.valid_count(),
        clean_samples: clean.valid_count(),
        dense_pixels: dense.valid_count(),
        density: dense.density(),
        mae_m: err_sum / n,
        rmse_m: (err_sq_sum / n).sqrt(),
        points: cloud.len(),
        stages_ms: stages,
    };
    Ok(ViewOutput {
        dense,
        cloud,
        metrics,
        err_sum,
        err_sq_sum,
        err_count,
    })
}

/// Renders, scans and processes one camera tick across all viewpoints.
///
/// Viewpoints are processed independently (concurrently when parallelism is available);
/// the overlay is the only point where their results meet.
pub fn process_tick(spec: &SceneSpec, tick: i64, cfg: &PipelineConfig) -> Result<FrameOutput> {
    let total = Instant::now();
    let t = tick as f64 / spec.camera_rate_hz;

    let start = Instant::now();
    let bundle = render_scene(spec, t)?;
    let render_ms = ms(start.elapsed());

    let views = par::map_indices(bundle.views.len(), |v| process_view(v, &bundle.views[v], tick, cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let start = Instant::now();
    let clouds: Vec<TimedPointCloud> = views.iter().map(|v| v.cloud.clone()).collect();
    let fused = fuse_views(&clouds);
    let fuse_ms = ms(start.elapsed());

    let ghost_points = fused
        .points()
        .iter()
        .filter(|p| spec.surface_distance(p, t) > GHOST_DISTANCE_M)
        .count();

    let (mut e, mut e2, mut n) = (0.0, 0.0, 0usize);
    let (mut valid, mut pixels) = (0usize, 0usize);
    let mut stages = StageMs::default();
    for v in &views {
        e += v.err_sum;
        e2 += v.err_sq_sum;
        n += v.err_count;
        valid += v.dense.valid_count();
        pixels += v.dense.width() * v.dense.height();
        stages = stages.max(v.metrics.stages_ms);
    }
    let nn = n.max(1) as f64;
    let metrics = FrameMetrics {
        frame: tick,
        t,
        render_ms,
        stages_ms: stages,
        fuse_ms,
        total_ms: ms(total.elapsed()),
        mae_m: e / nn,
        rmse_m: (e2 / nn).sqrt(),
        density: if pixels == 0 { 0.0 } else { valid as f64 / pixels as f64 },
        lidar_points: views.iter().map(|v| v.metrics.lidar_points).sum(),
        sparse_samples: views.iter().map(|v| v.metrics.sparse_samples).sum(),
        fused_points: fused.len(),
        ghost_points,
        views: views.iter().map(|v| v.metrics.clone()).collect(),
    };
    Ok(FrameOutput {
        bundle,
        views,
        fused,
        metrics,
    })
}

/// Runs `frames` consecutive ticks starting at tick 0, handing each frame's output to
/// `sink` as it completes.
pub fn run_pipeline_with<F>(
    spec: &SceneSpec,
    frames: usize,
    cfg: &PipelineConfig,
    mut sink: F,
) -> Result<Vec<FrameMetrics>>
where
    F: FnMut(&FrameOutput) -> Result<()>,
{
    spec.validate()?;
    cfg.validate()?;
    let mut out = Vec::with_capacity(frames);
    for tick in 0..frames as i64 {
        let frame = process_tick(spec, tick, cfg)?;
        sink(&frame)?;
        out.push(frame.metrics);
    }
    Ok(out)
}

/// Runs the full per-viewpoint pipeline over `frames` ticks and keeps the last frame's
/// output.
pub fn run_pipeline(spec: &SceneSpec, frames: usize, cfg: &PipelineConfig) -> Result<PipelineReport> {
    let mut last = None;
    let frames = run_pipeline_with(spec, frames, cfg, |f| {
        last = Some(f.clone());
        Ok(())
    })?;
    Ok(PipelineReport { frames, last })
}
