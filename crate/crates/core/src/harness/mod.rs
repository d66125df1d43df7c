//! Synthetic scenes, the end-to-end pipeline driver and the densify latency bench.

mod bench;
mod pipeline;
mod render;
mod scene;

pub use bench::{bench, random_inputs, BenchOptions, BenchRecord, BenchReport, PhaseMs};
pub use pipeline::{
    process_tick, run_pipeline, run_pipeline_with, FrameMetrics, FrameOutput, PipelineReport, StageMs,
    ViewMetrics, ViewOutput, GHOST_DISTANCE_M,
};
pub use render::{
    render_scene, sample_lidar, sample_sensor, seed_for, FrameBundle, ViewFrame, LIDARS_PER_VIEW,
};
pub use scene::{Hit, Mover, Primitive, SceneSpec, Shape};
