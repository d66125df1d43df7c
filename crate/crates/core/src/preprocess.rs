//! Cleanup of the merged sparse depth raster before densification: samples left behind by
//! moving objects and samples the camera cannot actually see.

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::geometry::SparseDepthMap;
use crate::image::RgbImage;
use crate::par;
use crate::raster::{check_dims, Raster};

/// Binary motion raster and the threshold it was computed with.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionMask {
    pub mask: Raster<u8>,
    pub tau_m: f32,
}

impl MotionMask {
    pub fn dims(&self) -> (usize, usize) {
        self.mask.dims()
    }

    #[inline]
    pub fn is_set(&self, x: usize, y: usize) -> bool {
        *self.mask.get(x, y) != 0
    }

    pub fn count(&self) -> usize {
        self.mask.as_slice().iter().filter(|&&m| m != 0).count()
    }
}

/// Marks pixels whose RGB value moved by more than `tau_m` (Euclidean) between frames.
pub fn motion_mask(prev: &RgbImage, cur: &RgbImage, tau_m: f32) -> Result<MotionMask> {
    check_dims("current rgb", cur.dims(), prev.dims())?;
    let (w, h) = cur.dims();
    let t2 = tau_m * tau_m;
    let mut mask = vec![0u8; w * h];
    let (p, c) = (prev.pixels(), cur.pixels());
    par::for_each_row(&mut mask, w, |y, row| {
        for (x, (a, b)) in p.row(y).iter().zip(c.row(y)).enumerate() {
            let d2: f32 = (0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum();
            row[x] = u8::from(d2 > t2);
        }
    });
    Ok(MotionMask {
        mask: Raster::from_vec(w, h, mask)?,
        tau_m,
    })
}

/// Window sums of a 0/1 row over `[i - r, i + r]` clipped to the row.
fn window_counts(row: &[u8], r: usize, out: &mut [u32]) {
    let n = row.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0u32);
    for &v in row {
        prefix.push(prefix.last().unwrap() + (v != 0) as u32);
    }
    for (i, o) in out.iter_mut().enumerate() {
        let lo = i.saturating_sub(r);
        let hi = (i + r + 1).min(n);
        *o = prefix[hi] - prefix[lo];
    }
}

/// Separable square-window max (`dilate`) or min over the in-bounds part of the window.
fn morph(mask: &Raster<u8>, r: usize, dilate: bool) -> Raster<u8> {
    let (w, h) = mask.dims();
    let keep = |count: u32, len: usize| {
        if dilate {
            count > 0
        } else {
            count as usize == len
        }
    };
    let win = |i: usize, n: usize| (i + r + 1).min(n) - i.saturating_sub(r);

    let mut horiz = vec![0u8; w * h];
    par::for_each_row(&mut horiz, w, |y, out| {
        let mut counts = vec![0u32; w];
        window_counts(mask.row(y), r, &mut counts);
        for x in 0..w {
            out[x] = u8::from(keep(counts[x], win(x, w)));
        }
    });

    // vertical pass on the transpose keeps the inner loop contiguous
    let mut transposed = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            transposed[x * h + y] = horiz[y * w + x];
        }
    }
    let mut vert_t = vec![0u8; w * h];
    par::for_each_row(&mut vert_t, h, |x, out| {
        let mut counts = vec![0u32; h];
        window_counts(&transposed[x * h..(x + 1) * h], r, &mut counts);
        for y in 0..h {
            out[y] = u8::from(keep(counts[y], win(y, h)));
        }
    });
    Raster::from_fn(w, h, |x, y| vert_t[x * h + y])
}

/// Morphological closing with a `(2·radius+1)²` square element.
///
/// The raster is treated as a window onto an unbounded background: the mask is padded by
/// `radius` zeros, closed, and cropped back, so regions never bleed into the border.
pub fn close_mask(m: &MotionMask, radius: usize) -> MotionMask {
    if radius == 0 {
        return m.clone();
    }
    let (w, h) = m.dims();
    let padded = Raster::from_fn(w + 2 * radius, h + 2 * radius, |x, y| {
        if x < radius || y < radius || x >= w + radius || y >= h + radius {
            0
        } else {
            *m.mask.get(x - radius, y - radius)
        }
    });
    // dilation windows past the padding only see zeros; erosion is read inside the crop,
    // whose windows stay within the padding
    let closed = morph(&morph(&padded, radius, true), radius, false);
    MotionMask {
        mask: Raster::from_fn(w, h, |x, y| *closed.get(x + radius, y + radius)),
        tau_m: m.tau_m,
    }
}

/// Drops samples under the motion mask that come from frames older than `latest_frame`.
pub fn remove_afterimages(
    sparse: &SparseDepthMap,
    motion: &MotionMask,
    latest_frame: i32,
) -> Result<SparseDepthMap> {
    check_dims("motion mask", motion.dims(), sparse.dims())?;
    let mut out = sparse.clone();
    for (x, y, _, f) in sparse.samples() {
        if f < latest_frame && motion.is_set(x, y) {
            out.clear(x, y);
        }
    }
    Ok(out)
}

/// Drops samples lying more than `delta` meters behind the mean depth of the valid samples
/// in their `(2·window+1)²` neighborhood (the sample itself included).
pub fn remove_occluded(sparse: &SparseDepthMap, window: usize, delta: f32) -> SparseDepthMap {
    let (w, h) = sparse.dims();
    // summed-area tables with a zero guard row and column
    let sw = w + 1;
    let mut sum = vec![0.0f64; sw * (h + 1)];
    let mut cnt = vec![0u32; sw * (h + 1)];
    for y in 0..h {
        let mut row_sum = 0.0f64;
        let mut row_cnt = 0u32;
        for x in 0..w {
            if sparse.is_valid(x, y) {
                row_sum += sparse.depth_at(x, y) as f64;
                row_cnt += 1;
            }
            let i = (y + 1) * sw + x + 1;
            sum[i] = sum[i - sw] + row_sum;
            cnt[i] = cnt[i - sw] + row_cnt;
        }
    }
    let rect = |x0: usize, y0: usize, x1: usize, y1: usize| {
        let (a, b, c, d) = (y0 * sw + x0, y0 * sw + x1, y1 * sw + x0, y1 * sw + x1);
        (sum[d] - sum[b] - sum[c] + sum[a], cnt[d] + cnt[a] - cnt[b] - cnt[c])
    };

    let mut out = sparse.clone();
    for (x, y, d, _) in sparse.samples() {
        let (x0, y0) = (x.saturating_sub(window), y.saturating_sub(window));
        let (x1, y1) = ((x + window + 1).min(w), (y + window + 1).min(h));
        let (s, n) = rect(x0, y0, x1, y1);
        let mean = s / n as f64;
        if d as f64 > mean + delta as f64 {
            out.clear(x, y);
        }
    }
    out
}

/// Motion mask, closing, afterimage removal, then occlusion removal, as enabled in `cfg`.
///
/// The newest frame index present in `sparse` is treated as the current LiDAR frame.
pub fn preprocess(
    sparse: &SparseDepthMap,
    prev_rgb: &RgbImage,
    cur_rgb: &RgbImage,
    cfg: &PipelineConfig,
) -> Result<SparseDepthMap> {
    cfg.validate()?;
    check_dims("current rgb", cur_rgb.dims(), sparse.dims())?;
    check_dims("previous rgb", prev_rgb.dims(), sparse.dims())?;
    let mut out = sparse.clone();
    if cfg.remove_afterimages {
        if let Some(latest) = sparse.max_frame_index() {
            let motion = motion_mask(prev_rgb, cur_rgb, cfg.tau_m)?;
            let closed = close_mask(&motion, cfg.closing_radius);
            out = remove_afterimages(&out, &closed, latest)?;
        }
    }
    if cfg.remove_occluded {
        out = remove_occluded(&out, cfg.occl_window, cfg.occl_delta);
    }
    Ok(out)
}
