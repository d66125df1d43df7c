use crate::error::Result;
use crate::geometry::SparseDepthMap;
use crate::par;
use crate::raster::{check_dims, Raster};

use super::{DenseDepthMap, WeightVolume};

/// Unnormalized depth sum `D̂` and weight sum `W` after the transpose-convolution phase.
#[derive(Clone, Debug, PartialEq)]
pub struct Accumulator {
    pub depth_sum: Raster<f32>,
    pub weight_sum: Raster<f32>,
}

/// Spreads every sample `D(x, y)` and its mask bit `B(x, y)` to `(x + a, y + b)` with the
/// weight stored at the sample for that offset.
///
/// Each output row pulls from its source rows in ascending plane order, so the result is
/// independent of how rows are split across workers.
pub fn accumulate(sparse: &SparseDepthMap, w: &WeightVolume) -> Result<Accumulator> {
    check_dims("sparse depth", sparse.dims(), w.dims())?;
    let (width, height) = w.dims();
    let r = w.radius() as isize;
    let side = w.side();
    let depth = sparse.depth().as_slice();
    let mask: Vec<f32> = sparse.mask().as_slice().iter().map(|&m| m as f32).collect();

    // Planes whose source row has no samples contribute nothing; skip them early.
    let row_has_samples: Vec<bool> = (0..height)
        .map(|y| sparse.mask().row(y).iter().any(|&m| m != 0))
        .collect();

    let mut depth_sum = vec![0.0f32; width * height];
    let mut weight_sum = vec![0.0f32; width * height];
    par::for_each_row2(&mut depth_sum, &mut weight_sum, width, |y, num, den| {
        for k in 0..side * side {
            let a = (k / side) as isize - r;
            let b = (k % side) as isize - r;
            let ys = y as isize - b;
            if ys < 0 || ys >= height as isize || !row_has_samples[ys as usize] {
                continue;
            }
            let ys = ys as usize;
            let plane = &w.plane(k)[ys * width..(ys + 1) * width];
            let d_row = &depth[ys * width..(ys + 1) * width];
            let b_row = &mask[ys * width..(ys + 1) * width];
            // destination x = source x + a
            let xs0 = (-a).max(0) as usize;
            let xs1 = (width as isize - a.max(0)).max(0) as usize;
            if xs1 <= xs0 {
                continue;
            }
            let xd0 = (xs0 as isize + a) as usize;
            let n = xs1 - xs0;
            let (num, den) = (&mut num[xd0..xd0 + n], &mut den[xd0..xd0 + n]);
            let (plane, d_row, b_row) = (&plane[xs0..xs1], &d_row[xs0..xs1], &b_row[xs0..xs1]);
            for i in 0..n {
                let wv = plane[i];
                num[i] += d_row[i] * wv;
                den[i] += b_row[i] * wv;
            }
        }
    });

    Ok(Accumulator {
        depth_sum: Raster::from_vec(width, height, depth_sum)?,
        weight_sum: Raster::from_vec(width, height, weight_sum)?,
    })
}

/// Divides the depth sum by the weight sum where the weight exceeds `w_min`.
pub fn normalize(acc: Accumulator, w_min: f32) -> DenseDepthMap {
    let Accumulator {
        mut depth_sum,
        weight_sum,
    } = acc;
    let (width, height) = depth_sum.dims();
    let mut valid = vec![0u8; width * height];
    let ws = weight_sum.as_slice();
    par::for_each_row2(depth_sum.as_mut_slice(), &mut valid, width, |y, d, v| {
        let wrow = &ws[y * width..(y + 1) * width];
        for x in 0..width {
            let wt = wrow[x];
            let out = if wt > w_min { d[x] / wt } else { 0.0 };
            if out.is_finite() && out > 0.0 {
                d[x] = out;
                v[x] = 1;
            } else {
                d[x] = 0.0;
                v[x] = 0;
            }
        }
    });
    let valid = Raster::from_vec(width, height, valid).expect("same dims");
    DenseDepthMap::from_parts(depth_sum, weight_sum, valid)
}

/// Transpose-convolution and normalization phases together.
pub fn scatter_normalize(
    sparse: &SparseDepthMap,
    w: &WeightVolume,
    w_min: f32,
) -> Result<DenseDepthMap> {
    Ok(normalize(accumulate(sparse, w)?, w_min))
}
