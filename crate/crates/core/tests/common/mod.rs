#![allow(dead_code)]

use depthfill::{RgbImage, SparseDepthMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer-valued random guide; integer channels keep color differences exact in f32.
pub fn random_guide(rng: &mut ChaCha8Rng, w: usize, h: usize) -> RgbImage {
    RgbImage::from_fn(w, h, |_, _| {
        [0, 1, 2].map(|_| rng.random_range(0..=255u32) as f32)
    })
}

/// Each pixel is a sample with probability `density`, depth uniform in `[lo, hi)`.
pub fn random_sparse(
    rng: &mut ChaCha8Rng,
    w: usize,
    h: usize,
    density: f64,
    lo: f32,
    hi: f32,
) -> SparseDepthMap {
    let mut s = SparseDepthMap::empty(w, h);
    for y in 0..h {
        for x in 0..w {
            if rng.random_bool(density) {
                s.set(x, y, rng.random_range(lo..hi), 0);
            }
        }
    }
    s
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
