use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::densify::{two_stage_densify_timed, PhaseTimings, TwoStageTimings};
use crate::error::{Error, Result};
use crate::geometry::SparseDepthMap;
use crate::image::RgbImage;
use crate::par;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchOptions {
    pub width: usize,
    pub height: usize,
    pub samples: usize,
    /// Timed repetitions after warmup.
    pub reps: usize,
    pub warmup: usize,
    /// Independent viewpoint pipelines densified concurrently per repetition.
    pub views: usize,
    pub seed: u64,
}

impl BenchOptions {
    pub fn new(width: usize, height: usize, samples: usize, reps: usize) -> Self {
        Self {
            width,
            height,
            samples,
            reps,
            warmup: 2,
            views: 1,
            seed: 7,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PhaseMs {
    pub weights: f64,
    pub spatial: f64,
    pub scatter: f64,
    pub normalize: f64,
}

impl From<PhaseTimings> for PhaseMs {
    fn from(t: PhaseTimings) -> Self {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        Self {
            weights: ms(t.weights),
            spatial: ms(t.spatial),
            scatter: ms(t.scatter),
            normalize: ms(t.normalize),
        }
    }
}

impl PhaseMs {
    pub fn sum(&self) -> f64 {
        self.weights + self.spatial + self.scatter + self.normalize
    }
}

/// Timing of one repetition; serialized as one JSON line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub rep: usize,
    pub width: usize,
    pub height: usize,
    pub samples: usize,
    pub workers: usize,
    pub views: usize,
    /// Wall-clock of the whole repetition.
    pub total_ms: f64,
    /// Time inside the densify call of the first viewpoint.
    pub densify_ms: f64,
    pub downsample_ms: f64,
    pub upsample_ms: f64,
    pub stage1: PhaseMs,
    pub stage2: PhaseMs,
    /// Share of `densify_ms` spent in the filter phases of both stages.
    pub phase_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub median_phase_fraction: f64,
}

/// Random guide and `samples` distinct sparse depths in [0.5, 10] m.
pub fn random_inputs(width: usize, height: usize, samples: usize, seed: u64) -> (RgbImage, SparseDepthMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let guide = RgbImage::from_fn(width, height, |_, _| {
        [
            rng.random_range(0.0..=255.0f32).round(),
            rng.random_range(0.0..=255.0f32).round(),
            rng.random_range(0.0..=255.0f32).round(),
        ]
    });
    let mut sparse = SparseDepthMap::empty(width, height);
    let n = samples.min(width * height);
    for i in rand::seq::index::sample(&mut rng, width * height, n) {
        let d = rng.random_range(0.5..10.0f32);
        sparse.set(i % width, i / width, d, 0);
    }
    (guide, sparse)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    // nearest-rank
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Latency of [`two_stage_densify`](crate::densify::two_stage_densify) on random inputs.
pub fn bench(cfg: &PipelineConfig, opts: &BenchOptions) -> Result<BenchReport> {
    cfg.validate()?;
    if opts.reps < 3 {
        return Err(Error::config("bench needs at least 3 repetitions"));
    }
    if opts.width == 0 || opts.height == 0 || opts.views == 0 {
        return Err(Error::config("bench raster and view count must be non-zero"));
    }
    let inputs: Vec<(RgbImage, SparseDepthMap)> = (0..opts.views)
        .map(|v| random_inputs(opts.width, opts.height, opts.samples, opts.seed + v as u64))
        .collect();

    let run_once = || -> Result<(Duration, TwoStageTimings)> {
        let start = Instant::now();
        let timings = if opts.views == 1 {
            vec![two_stage_densify_timed(&inputs[0].0, &inputs[0].1, cfg)?.1]
        } else {
            par::map_indices(opts.views, |v| {
                two_stage_densify_timed(&inputs[v].0, &inputs[v].1, cfg).map(|r| r.1)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?
        };
        Ok((start.elapsed(), timings[0]))
    };

    for _ in 0..opts.warmup {
        run_once()?;
    }
    let mut records = Vec::with_capacity(opts.reps);
    for rep in 0..opts.reps {
        let (wall, t) = run_once()?;
        let densify_ms = t.total.as_secs_f64() * 1e3;
        let stage1 = PhaseMs::from(t.stage1);
        let stage2 = PhaseMs::from(t.stage2);
        records.push(BenchRecord {
            rep,
            width: opts.width,
            height: opts.height,
            samples: opts.samples,
            workers: par::workers(),
            views: opts.views,
            total_ms: wall.as_secs_f64() * 1e3,
            densify_ms,
            downsample_ms: t.downsample.as_secs_f64() * 1e3,
            upsample_ms: t.upsample.as_secs_f64() * 1e3,
            stage1,
            stage2,
            phase_fraction: if densify_ms > 0.0 {
                (stage1.sum() + stage2.sum()) / densify_ms
            } else {
                1.0
            },
        });
    }
    let mut totals: Vec<f64> = records.iter().map(|r| r.total_ms).collect();
    totals.sort_by(f64::total_cmp);
    let mut fractions: Vec<f64> = records.iter().map(|r| r.phase_fraction).collect();
    fractions.sort_by(f64::total_cmp);
    Ok(BenchReport {
        median_ms: percentile(&totals, 0.5),
        p95_ms: percentile(&totals, 0.95),
        median_phase_fraction: percentile(&fractions, 0.5),
        records,
    })
}
