use crate::error::Result;
use crate::geometry::SparseDepthMap;
use crate::image::RgbImage;
use crate::raster::{check_dims, Raster};

use super::{DenseDepthMap, FilterParams};

/// Direct gather evaluation of the bilateral estimate, in `f64`.
///
/// For each output pixel `x` the estimate is `Σ D(xₙ)·w_c·w_p / Σ w_c·w_p` over samples
/// `xₙ` in the `(2r+1)²` window. The weight is anchored at the sample: it is the weight the
/// sample at `xₙ` assigns to the offset pointing at `x`, which is what the tensor form
/// scatters. Cost is `O(width·height·(2r+1)²)`; meant for small rasters.
pub fn jbf_reference(
    guide: &RgbImage,
    sparse: &SparseDepthMap,
    p: &FilterParams,
) -> Result<DenseDepthMap> {
    p.validate()?;
    check_dims("sparse depth", sparse.dims(), guide.dims())?;
    let (w, h) = guide.dims();
    let r = p.r as isize;
    let sc = p.sigma_c as f64;
    let sp = p.sigma_p as f64;
    let w_min = p.w_min as f64;

    let mut depth = Raster::filled(w, h, 0.0f32);
    let mut weight = Raster::filled(w, h, 0.0f32);
    let mut valid = Raster::filled(w, h, 0u8);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let here = guide.get(x as usize, y as usize);
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            for a in -r..=r {
                for b in -r..=r {
                    // sample at x - (a, b) reaches x through offset (a, b)
                    let (xs, ys) = (x - a, y - b);
                    if xs < 0 || ys < 0 || xs >= w as isize || ys >= h as isize {
                        continue;
                    }
                    let (xs, ys) = (xs as usize, ys as usize);
                    if !sparse.is_valid(xs, ys) {
                        continue;
                    }
                    let there = guide.get(xs, ys);
                    let dc2: f64 = (0..3)
                        .map(|c| {
                            let d = there[c] as f64 - here[c] as f64;
                            d * d
                        })
                        .sum();
                    let ds2 = (a * a + b * b) as f64;
                    let wc = (-dc2 / (2.0 * sc * sc)).exp();
                    let wp = (-ds2 / (2.0 * sp * sp)).exp();
                    let wt = wc * wp;
                    num += sparse.depth_at(xs, ys) as f64 * wt;
                    den += wt;
                }
            }
            let (xu, yu) = (x as usize, y as usize);
            *weight.get_mut(xu, yu) = den as f32;
            if den > w_min {
                let d = num / den;
                if d.is_finite() && d > 0.0 {
                    *depth.get_mut(xu, yu) = d as f32;
                    *valid.get_mut(xu, yu) = 1;
                }
            }
        }
    }
    Ok(DenseDepthMap::from_parts(depth, weight, valid))
}
