mod common;

use depthfill::preprocess::{close_mask, motion_mask, remove_afterimages, remove_occluded, MotionMask};
use depthfill::{RgbImage, SparseDepthMap};
use proptest::prelude::*;
use rand::Rng;

use common::{random_guide, random_sparse, rng};

fn random_mask(seed: u64, w: usize, h: usize, p: f64) -> MotionMask {
    let mut g = rng(seed);
    let a = RgbImage::uniform(w, h, [0.0; 3]);
    let b = RgbImage::from_fn(w, h, |_, _| if g.random_bool(p) { [200.0; 3] } else { [0.0; 3] });
    motion_mask(&a, &b, 30.0).unwrap()
}

fn subset(a: &MotionMask, b: &MotionMask) -> bool {
    let (w, h) = a.dims();
    (0..h).all(|y| (0..w).all(|x| !a.is_set(x, y) || b.is_set(x, y)))
}

fn window_mean(s: &SparseDepthMap, x: usize, y: usize, k: usize) -> Option<f64> {
    let (w, h) = s.dims();
    let (mut sum, mut n) = (0.0, 0);
    for yy in y.saturating_sub(k)..=(y + k).min(h - 1) {
        for xx in x.saturating_sub(k)..=(x + k).min(w - 1) {
            if s.is_valid(xx, yy) {
                sum += s.depth_at(xx, yy) as f64;
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum / n as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn motion_mask_matches_per_pixel_norm(seed in any::<u64>(), tau in 1.0f32..200.0) {
        let mut g = rng(seed);
        let a = random_guide(&mut g, 17, 13);
        let b = random_guide(&mut g, 17, 13);
        let m = motion_mask(&a, &b, tau).unwrap();
        for y in 0..13 {
            for x in 0..17 {
                let (p, q) = (a.get(x, y), b.get(x, y));
                let d = (0..3).map(|c| ((p[c] - q[c]) as f64).powi(2)).sum::<f64>().sqrt();
                prop_assert_eq!(m.is_set(x, y), d > tau as f64);
            }
        }
    }

    #[test]
    fn closing_is_extensive_monotone_and_idempotent(
        seed in any::<u64>(), w in 4usize..40, h in 4usize..40, r in 0usize..6, p in 0.0f64..0.4,
    ) {
        let m = random_mask(seed, w, h, p);
        let c = close_mask(&m, r);
        prop_assert!(subset(&m, &c));
        prop_assert_eq!(&close_mask(&c, r).mask, &c.mask);
        let bigger = random_mask(seed ^ 1, w, h, p);
        let union = MotionMask {
            mask: depthfill::Raster::from_fn(w, h, |x, y| u8::from(m.is_set(x, y) || bigger.is_set(x, y))),
            tau_m: m.tau_m,
        };
        prop_assert!(subset(&c, &close_mask(&union, r)));
    }

    #[test]
    fn afterimage_removal_only_drops_old_masked_samples(
        seed in any::<u64>(), latest in 0i32..4, p in 0.0f64..0.6,
    ) {
        let mut g = rng(seed);
        let mut s = SparseDepthMap::empty(20, 20);
        for y in 0..20 {
            for x in 0..20 {
                if g.random_bool(0.4) {
                    s.set(x, y, g.random_range(0.5..5.0), g.random_range(0..4));
                }
            }
        }
        let m = random_mask(seed, 20, 20, p);
        let out = remove_afterimages(&s, &m, latest).unwrap();
        for (x, y, d, f) in s.samples() {
            let drop = m.is_set(x, y) && f < latest;
            prop_assert_eq!(out.is_valid(x, y), !drop);
            if !drop {
                prop_assert_eq!(out.depth_at(x, y), d);
                prop_assert_eq!(out.frame_at(x, y), f);
            }
        }
        prop_assert_eq!(out.valid_count() + s.samples().filter(|&(x, y, _, f)| m.is_set(x, y) && f < latest).count(), s.valid_count());
        let oldest = s.samples().map(|(_, _, _, f)| f).min().unwrap_or(0);
        prop_assert_eq!(remove_afterimages(&s, &m, oldest).unwrap(), s);
    }

    #[test]
    fn occlusion_removal_matches_window_mean_rule(
        seed in any::<u64>(), w in 4usize..40, h in 4usize..40, k in 1usize..8,
        delta in 0.0f32..1.0, density in 0.05f64..0.8,
    ) {
        let mut g = rng(seed);
        let s = random_sparse(&mut g, w, h, density, 0.5, 6.0);
        let out = remove_occluded(&s, k, delta);
        for (x, y, d, _) in s.samples() {
            let mean = window_mean(&s, x, y, k).unwrap();
            let margin = d as f64 - mean - delta as f64;
            if margin.abs() < 1e-4 {
                continue;
            }
            prop_assert_eq!(out.is_valid(x, y), margin < 0.0, "({},{}) d={} mean={}", x, y, d, mean);
            if d as f64 <= mean {
                prop_assert!(out.is_valid(x, y));
            }
        }
        prop_assert!(out.valid_count() <= s.valid_count());
    }
}
