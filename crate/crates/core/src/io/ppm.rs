//! Binary PPM (`P6`) with 8-bit samples.

use std::io::{BufRead, Write};
use std::path::Path;

use super::header::{number, token};
use crate::error::{Error, Result};
use crate::image::RgbImage;

const FORMAT: &str = "PPM";

pub fn write<W: Write>(out: &mut W, img: &RgbImage) -> Result<()> {
    write!(out, "P6\n{} {}\n255\n", img.width(), img.height())?;
    out.write_all(&img.to_rgb8())?;
    out.flush()?;
    Ok(())
}

/// Reads `P6`; samples with a maxval below 255 are rescaled to [0, 255].
pub fn read<R: BufRead>(input: &mut R) -> Result<RgbImage> {
    let magic = token(input, FORMAT)?;
    if magic != "P6" {
        return Err(Error::format(FORMAT, format!("expected `P6`, found `{magic}`")));
    }
    let w: usize = number(input, FORMAT, "width")?;
    let h: usize = number(input, FORMAT, "height")?;
    let maxval: u32 = number(input, FORMAT, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(FORMAT, format!("unsupported maxval {maxval}")));
    }
    let mut bytes = vec![0u8; w * h * 3];
    input
        .read_exact(&mut bytes)
        .map_err(|_| Error::format(FORMAT, "truncated pixel data"))?;
    if maxval == 255 {
        return RgbImage::from_rgb8(w, h, &bytes);
    }
    let scale = 255.0 / maxval as f32;
    let mut i = 0;
    Ok(RgbImage::from_fn(w, h, |_, _| {
        let p = [bytes[i], bytes[i + 1], bytes[i + 2]].map(|b| b as f32 * scale);
        i += 3;
        p
    }))
}

pub fn write_path(path: &Path, img: &RgbImage) -> Result<()> {
    write(&mut super::create(path)?, img)
}

pub fn read_path(path: &Path) -> Result<RgbImage> {
    read(&mut super::open(path)?)
}
