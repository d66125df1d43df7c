use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use depthfill::geometry::{merge_frames, project_points};
use depthfill::harness::{bench, render_scene, run_pipeline_with, BenchOptions, SceneSpec};
use depthfill::io::{pfm, ply, ppm};
use depthfill::postprocess::contour_filter;
use depthfill::{par, two_stage_densify, PipelineConfig, Raster, SparseDepthMap};

#[derive(Parser)]
#[command(name = "depthfill", version, about = "Guided densification of sparse LiDAR depth")]
struct Cli {
    /// Run every stage on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Densify one sparse depth map guided by an RGB image.
    Densify {
        #[arg(long)]
        rgb: PathBuf,
        /// Sparse depth; non-positive or non-finite pixels are empty.
        #[arg(long)]
        sparse: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArg,
    },
    /// Run the synthetic multi-view pipeline and write metrics and fused clouds.
    Pipeline {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, default_value_t = 10)]
        frames: usize,
        #[arg(long)]
        out_dir: PathBuf,
        /// Keep only the first N viewpoints.
        #[arg(long)]
        views: Option<usize>,
        /// Write metrics only.
        #[arg(long)]
        no_ply: bool,
        #[command(flatten)]
        cfg: ConfigArg,
    },
    /// Time two-stage densification on random inputs; one JSON line per repetition.
    Bench {
        #[arg(long, default_value_t = 640)]
        width: usize,
        #[arg(long, default_value_t = 360)]
        height: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 2)]
        warmup: usize,
        /// Viewpoint pipelines densified concurrently per repetition.
        #[arg(long, default_value_t = 1)]
        views: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        cfg: ConfigArg,
    },
    /// Render one synthetic frame bundle to disk.
    Synth {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct ConfigArg {
    /// key=value pipeline configuration.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<PipelineConfig> {
        match &self.config {
            Some(p) => PipelineConfig::load(p).with_context(|| format!("loading {}", p.display())),
            None => Ok(PipelineConfig::default()),
        }
    }
}

#[derive(Args)]
struct SceneArg {
    /// Scene file, or one of the built-in names `room`, `moving_box`, `occlusion`.
    #[arg(long)]
    scene: String,
}

impl SceneArg {
    fn load(&self) -> Result<SceneSpec> {
        let path = Path::new(&self.scene);
        if path.exists() {
            return SceneSpec::load(path).with_context(|| format!("loading {}", path.display()));
        }
        Ok(match self.scene.as_str() {
            "room" => SceneSpec::room(4),
            "moving_box" => SceneSpec::moving_box(),
            "occlusion" => SceneSpec::occlusion(),
            other => bail!("no scene file or built-in scene named `{other}`"),
        })
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.sequential {
        par::sequential(|| run(cli.command))
    } else {
        run(cli.command)
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Densify { rgb, sparse, out, cfg } => densify(&rgb, &sparse, &out, &cfg.load()?),
        Command::Pipeline {
            scene,
            frames,
            out_dir,
            views,
            no_ply,
            cfg,
        } => {
            let mut spec = scene.load()?;
            if let Some(n) = views {
                if n == 0 || n > spec.cameras.len() {
                    bail!("--views must lie in 1..={}", spec.cameras.len());
                }
                spec.cameras.truncate(n);
            }
            pipeline(&spec, frames, &out_dir, !no_ply, &cfg.load()?)
        }
        Command::Bench {
            width,
            height,
            samples,
            reps,
            warmup,
            views,
            seed,
            cfg,
        } => {
            let opts = BenchOptions {
                warmup,
                views,
                seed,
                ..BenchOptions::new(width, height, samples, reps)
            };
            run_bench(&opts, &cfg.load()?)
        }
        Command::Synth { scene, t, out_dir } => synth(&scene.load()?, t, &out_dir),
    }
}

fn densify(rgb: &Path, sparse: &Path, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let guide = ppm::read_path(rgb)?;
    let depth = pfm::read_path(sparse)?;
    if guide.dims() != depth.dims() {
        bail!(
            "rgb is {}x{} but sparse depth is {}x{}",
            guide.width(),
            guide.height(),
            depth.width(),
            depth.height()
        );
    }
    let sparse = SparseDepthMap::from_depth(&depth, 0);
    let start = Instant::now();
    let mut dense = two_stage_densify(&guide, &sparse, cfg)?;
    if cfg.contour_filter {
        dense = contour_filter(&dense, cfg.grad_thresh);
    }
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let (w, h) = dense.dims();
    let raster = Raster::from_fn(w, h, |x, y| if dense.is_valid(x, y) { dense.depth_at(x, y) } else { 0.0 });
    pfm::write_path(out, &raster)?;
    eprintln!(
        "{} samples -> {} of {} pixels ({:.1}%) in {ms:.1} ms",
        sparse.valid_count(),
        dense.valid_count(),
        w * h,
        dense.density() * 100.0
    );
    Ok(())
}

fn pipeline(spec: &SceneSpec, frames: usize, out_dir: &Path, write_ply: bool, cfg: &PipelineConfig) -> Result<()> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let metrics_path = out_dir.join("metrics.jsonl");
    let mut metrics = BufWriter::new(
        fs::File::create(&metrics_path).with_context(|| format!("creating {}", metrics_path.display()))?,
    );
    let report = run_pipeline_with(spec, frames, cfg, |frame| {
        if write_ply {
            ply::write_path(&out_dir.join(format!("fused_{:04}.ply", frame.metrics.frame)), &frame.fused)?;
        }
        serde_json::to_writer(&mut metrics, &frame.metrics).map_err(std::io::Error::from)?;
        metrics.write_all(b"\n")?;
        Ok(())
    })?;
    metrics.flush()?;
    for m in &report {
        eprintln!(
            "frame {:>3}: {:>7.1} ms, density {:.3}, mae {:.4} m, {} points, {} ghosts",
            m.frame, m.total_ms, m.density, m.mae_m, m.fused_points, m.ghost_points
        );
    }
    Ok(())
}

fn run_bench(opts: &BenchOptions, cfg: &PipelineConfig) -> Result<()> {
    let report = bench(cfg, opts)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for r in &report.records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    eprintln!(
        "{}x{} {} samples, {} views, {} workers: median {:.2} ms, p95 {:.2} ms, filter phases {:.1}%",
        opts.width,
        opts.height,
        opts.samples,
        opts.views,
        report.records.first().map_or(0, |r| r.workers),
        report.median_ms,
        report.p95_ms,
        report.median_phase_fraction * 100.0
    );
    Ok(())
}

fn synth(spec: &SceneSpec, t: f64, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let bundle = render_scene(spec, t)?;
    for (v, view) in bundle.views.iter().enumerate() {
        let file = |name: &str| out_dir.join(format!("view{v}_{name}"));
        ppm::write_path(&file("rgb.ppm"), &view.rgb)?;
        ppm::write_path(&file("prev_rgb.ppm"), &view.prev_rgb)?;
        pfm::write_path(&file("gt.pfm"), &view.gt_depth)?;
        let sparse = project_points(&merge_frames(&view.lidar_frames)?, &view.camera);
        pfm::write_path(&file("sparse.pfm"), sparse.depth())?;
        for cloud in &view.lidar_frames {
            let frame = cloud.frame_index().first().copied().unwrap_or(bundle.tick as i32);
            ply::write_path(&file(&format!("lidar_{frame}.ply")), cloud)?;
        }
    }
    eprintln!(
        "tick {} (t = {t:.4} s): wrote {} views to {}",
        bundle.tick,
        bundle.views.len(),
        out_dir.display()
    );
    Ok(())
}
