use crate::error::{Error, Result};
use crate::raster::Raster;

/// RGB guidance image with channels on the [0, 255] scale stored as `f32`.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    pixels: Raster<[f32; 3]>,
}

impl RgbImage {
    pub fn new(pixels: Raster<[f32; 3]>) -> Result<Self> {
        if let Some(bad) = pixels
            .as_slice()
            .iter()
            .flatten()
            .find(|c| !c.is_finite() || **c < 0.0 || **c > 255.0)
        {
            return Err(Error::config(format!(
                "rgb channel value {bad} outside [0, 255]"
            )));
        }
        Ok(Self { pixels })
    }

    pub fn uniform(width: usize, height: usize, color: [f32; 3]) -> Self {
        let c = color.map(|v| v.clamp(0.0, 255.0));
        Self {
            pixels: Raster::filled(width, height, c),
        }
    }

    /// Builds an image from a generator; channel values are clamped into [0, 255].
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        Self {
            pixels: Raster::from_fn(width, height, |x, y| f(x, y).map(|v| v.clamp(0.0, 255.0))),
        }
    }

    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * 3 {
            return Err(Error::config(format!(
                "rgb8 buffer holds {} bytes, expected {}",
                bytes.len(),
                width * height * 3
            )));
        }
        let data = bytes
            .chunks_exact(3)
            .map(|p| [p[0] as f32, p[1] as f32, p[2] as f32])
            .collect();
        Ok(Self {
            pixels: Raster::from_vec(width, height, data)?,
        })
    }

    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .as_slice()
            .iter()
            .flat_map(|p| p.map(|c| c.round().clamp(0.0, 255.0) as u8))
            .collect()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.pixels.dims()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        *self.pixels.get(x, y)
    }

    pub fn pixels(&self) -> &Raster<[f32; 3]> {
        &self.pixels
    }

    /// Block-average downsample; edge blocks average whatever pixels they cover.
    pub fn downsample_mean(&self, factor: usize) -> RgbImage {
        let factor = factor.max(1);
        if factor == 1 {
            return self.clone();
        }
        let (w, h) = self.dims();
        let (cw, ch) = (w.div_ceil(factor), h.div_ceil(factor));
        let pixels = Raster::from_fn(cw, ch, |cx, cy| {
            let mut acc = [0.0f64; 3];
            let mut n = 0usize;
            for y in cy * factor..((cy + 1) * factor).min(h) {
                for p in &self.pixels.row(y)[cx * factor..((cx + 1) * factor).min(w)] {
                    for c in 0..3 {
                        acc[c] += p[c] as f64;
                    }
                    n += 1;
                }
            }
            acc.map(|v| (v / n as f64) as f32)
        });
        RgbImage { pixels }
    }
}
