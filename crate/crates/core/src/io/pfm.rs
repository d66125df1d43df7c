//! Single-channel PFM (`Pf`). Rows are stored bottom-to-top; a negative scale means
//! little-endian samples. Depth files use meters with `0.0` for holes.

use std::io::{BufRead, Write};
use std::path::Path;

use super::header::{number, token};
use crate::error::{Error, Result};
use crate::raster::Raster;

const FORMAT: &str = "PFM";

/// Writes little-endian `Pf`.
pub fn write<W: Write>(out: &mut W, img: &Raster<f32>) -> Result<()> {
    let (w, h) = img.dims();
    write!(out, "Pf\n{w} {h}\n-1.0\n")?;
    let mut buf = Vec::with_capacity(w * 4);
    for y in (0..h).rev() {
        buf.clear();
        for v in img.row(y) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read<R: BufRead>(input: &mut R) -> Result<Raster<f32>> {
    let magic = token(input, FORMAT)?;
    if magic != "Pf" {
        return Err(Error::format(FORMAT, format!("expected `Pf`, found `{magic}`")));
    }
    let w: usize = number(input, FORMAT, "width")?;
    let h: usize = number(input, FORMAT, "height")?;
    let scale: f32 = number(input, FORMAT, "scale")?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::format(FORMAT, "scale must be non-zero"));
    }
    let little = scale < 0.0;
    let mut bytes = vec![0u8; w * h * 4];
    input
        .read_exact(&mut bytes)
        .map_err(|_| Error::format(FORMAT, "truncated pixel data"))?;
    let mut data = vec![0.0f32; w * h];
    for (i, chunk) in bytes.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (file_row, x) = (i / w.max(1), i % w.max(1));
        data[(h - 1 - file_row) * w + x] = v;
    }
    Raster::from_vec(w, h, data)
}

pub fn write_path(path: &Path, img: &Raster<f32>) -> Result<()> {
    write(&mut super::create(path)?, img)
}

pub fn read_path(path: &Path) -> Result<Raster<f32>> {
    read(&mut super::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_bottom_up_little_endian() {
        let img = Raster::from_vec(2, 2, vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let mut buf = Vec::new();
        write(&mut buf, &img).unwrap();
        let header = b"Pf\n2 2\n-1.0\n";
        assert_eq!(&buf[..header.len()], header);
        let body = &buf[header.len()..];
        assert_eq!(&body[0..4], &3.0f32.to_le_bytes());
        assert_eq!(&body[12..16], &2.0f32.to_le_bytes());
        assert_eq!(read(&mut buf.as_slice()).unwrap(), img);
    }

    #[test]
    fn reads_big_endian() {
        let mut buf = b"Pf\n1 1\n1.0\n".to_vec();
        buf.extend_from_slice(&2.5f32.to_be_bytes());
        assert_eq!(read(&mut buf.as_slice()).unwrap().as_slice(), &[2.5]);
    }

    #[test]
    fn rejects_color_and_truncated() {
        assert!(read(&mut b"PF\n1 1\n-1.0\n".as_slice()).is_err());
        assert!(read(&mut b"Pf\n2 2\n-1.0\n\0\0".as_slice()).is_err());
    }
}
