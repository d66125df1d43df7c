use crate::image::RgbImage;
use crate::par;

/// Per-pixel neighbor weights, one `width×height` plane per offset `(a, b)`.
///
/// Plane [`offset_index`]`(r, a, b)` holds, at pixel `(x, y)`, the weight that the sample at
/// `(x, y)` contributes to pixel `(x + a, y + b)`. Offsets that leave the raster hold 0.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVolume {
    r: usize,
    width: usize,
    height: usize,
    planes: Vec<f32>,
}

/// Plane index of offset `(a, b)`: `(2r+1)(r+a) + (r+b)`.
#[inline]
pub fn offset_index(r: usize, a: isize, b: isize) -> usize {
    let side = 2 * r + 1;
    side * (r as isize + a) as usize + (r as isize + b) as usize
}

/// Spatial Gaussian `exp(-(a²+b²) / 2σ_p²)` evaluated in `f64` and rounded once.
#[inline]
pub fn spatial_weight(a: isize, b: isize, sigma_p: f32) -> f32 {
    let s2 = (a * a + b * b) as f64;
    let sp = sigma_p as f64;
    (-s2 / (2.0 * sp * sp)).exp() as f32
}

impl WeightVolume {
    pub fn radius(&self) -> usize {
        self.r
    }

    pub fn side(&self) -> usize {
        2 * self.r + 1
    }

    pub fn offsets(&self) -> usize {
        self.side() * self.side()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// `(a, b)` of plane `k`.
    #[inline]
    pub fn offset_of(&self, k: usize) -> (isize, isize) {
        let side = self.side();
        let r = self.r as isize;
        ((k / side) as isize - r, (k % side) as isize - r)
    }

    pub fn plane(&self, k: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.planes[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, a: isize, b: isize) -> f32 {
        let k = offset_index(self.r, a, b);
        self.planes[(k * self.height + y) * self.width + x]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.planes
    }
}

/// Color-weight phase: differences against every neighbor offset, then the color Gaussian.
pub fn color_weights(guide: &RgbImage, r: usize, sigma_c: f32) -> WeightVolume {
    let (width, height) = guide.dims();
    let side = 2 * r + 1;
    let offsets = side * side;
    let mut planes = vec![0.0f32; offsets * width * height];
    let inv = (1.0 / (2.0 * sigma_c as f64 * sigma_c as f64)) as f32;
    let px = guide.pixels();
    let ri = r as isize;

    // Rows of the whole volume: row j is plane j / height, image row j % height.
    par::for_each_row(&mut planes, width, |j, out| {
        let k = j / height;
        let y = j % height;
        let a = (k / side) as isize - ri;
        let b = (k % side) as isize - ri;
        let yn = y as isize + b;
        if yn < 0 || yn >= height as isize {
            return;
        }
        let center = px.row(y);
        let neigh = px.row(yn as usize);
        let x0 = (-a).max(0) as usize;
        let x1 = (width as isize - a.max(0)).max(0) as usize;
        for x in x0..x1.max(x0) {
            let c = center[x];
            let n = neigh[(x as isize + a) as usize];
            let d0 = c[0] - n[0];
            let d1 = c[1] - n[1];
            let d2 = c[2] - n[2];
            out[x] = (-(d0 * d0 + d1 * d1 + d2 * d2) * inv).exp();
        }
    });

    WeightVolume {
        r,
        width,
        height,
        planes,
    }
}

/// Spatial phase: multiplies each plane by the Gaussian of its offset length.
pub fn apply_spatial(w: &mut WeightVolume, sigma_p: f32) {
    let (width, height, side, r) = (w.width, w.height, w.side(), w.r as isize);
    let factors: Vec<f32> = (0..side * side)
        .map(|k| spatial_weight((k / side) as isize - r, (k % side) as isize - r, sigma_p))
        .collect();
    par::for_each_row(&mut w.planes, width, |j, row| {
        let s = factors[j / height];
        if s != 1.0 {
            row.iter_mut().for_each(|v| *v *= s);
        }
    });
}
