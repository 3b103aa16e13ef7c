//! Portable float map reader/writer.
//!
//! `PF` is three channels, `Pf` one channel. The scale line's sign encodes
//! endianness (negative = little-endian, which is what we write, always
//! -1.0). Pixel rows are stored bottom-to-top per the format convention;
//! the in-memory images are top-down, so rows are flipped on both paths.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use crate::error::{GscError, Result};
use crate::img::{ImageGray, ImageRgb};
use crate::math::Vec3;

pub fn write_pfm_rgb(image: &ImageRgb, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(w, "PF\n{} {}\n-1.0\n", image.width, image.height)?;
    for y in (0..image.height).rev() {
        for x in 0..image.width {
            let v = image.get(x, y);
            for c in [v.x, v.y, v.z] {
                w.write_all(&(c as f32).to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn write_pfm_gray(image: &ImageGray, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(w, "Pf\n{} {}\n-1.0\n", image.width, image.height)?;
    for y in (0..image.height).rev() {
        for x in 0..image.width {
            w.write_all(&(image.get(x, y) as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_pfm_rgb(path: &Path) -> Result<ImageRgb> {
    let (channels, width, height, data) = read_pfm_raw(path)?;
    if channels != 3 {
        return Err(GscError::Image(format!(
            "{}: expected color PFM (PF), found grayscale",
            path.display()
        )));
    }
    let mut out = ImageRgb::filled(width, height, Vec3::zeros());
    for y in 0..height {
        let src_row = height - 1 - y;
        for x in 0..width {
            let o = (src_row * width + x) * 3;
            out.set(
                x,
                y,
                Vec3::new(data[o] as f64, data[o + 1] as f64, data[o + 2] as f64),
            );
        }
    }
    Ok(out)
}

pub fn read_pfm_gray(path: &Path) -> Result<ImageGray> {
    let (channels, width, height, data) = read_pfm_raw(path)?;
    if channels != 1 {
        return Err(GscError::Image(format!(
            "{}: expected grayscale PFM (Pf), found color",
            path.display()
        )));
    }
    let mut out = ImageGray::filled(width, height, 0.0);
    for y in 0..height {
        let src_row = height - 1 - y;
        for x in 0..width {
            out.set(x, y, data[src_row * width + x] as f64);
        }
    }
    Ok(out)
}

fn read_pfm_raw(path: &Path) -> Result<(usize, usize, usize, Vec<f32>)> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let magic = read_token(&mut r)?;
    let channels = match magic.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => {
            return Err(GscError::Image(format!(
                "{}: bad PFM magic `{other}`",
                path.display()
            )))
        }
    };
    let width: usize = parse_token(&mut r, "width")?;
    let height: usize = parse_token(&mut r, "height")?;
    let scale: f64 = parse_token(&mut r, "scale")?;
    if width == 0 || height == 0 {
        return Err(GscError::Image(format!(
            "{}: zero image dimension",
            path.display()
        )));
    }
    let little_endian = scale < 0.0;
    let count = width * height * channels;
    let mut bytes = vec![0u8; count * 4];
    r.read_exact(&mut bytes)?;
    let mut data = Vec::with_capacity(count);
    for chunk in bytes.chunks_exact(4) {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        data.push(if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        });
    }
    Ok((channels, width, height, data))
}

fn read_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    // Skip leading whitespace, then read until the next whitespace byte.
    loop {
        r.read_exact(&mut byte)?;
        if !byte[0].is_ascii_whitespace() {
            token.push(byte[0]);
            break;
        }
    }
    loop {
        r.read_exact(&mut byte)?;
        if byte[0].is_ascii_whitespace() {
            break;
        }
        token.push(byte[0]);
    }
    String::from_utf8(token).map_err(|_| GscError::Image("non-ascii PFM header".into()))
}

fn parse_token<R: BufRead, T: std::str::FromStr>(r: &mut R, what: &str) -> Result<T> {
    read_token(r)?
        .parse()
        .map_err(|_| GscError::Image(format!("bad PFM header field `{what}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn rgb_round_trip_is_exact_in_f32() {
        let mut rng = crate::oracle::rng(31);
        let mut img = ImageRgb::filled(7, 5, Vec3::zeros());
        for p in &mut img.pixels {
            *p = Vec3::new(
                rng.gen_range(-2.0..2.0f64),
                rng.gen_range(0.0..10.0),
                rng.gen_range(-1.0..1.0),
            );
            // Keep only what f32 can represent so the round trip is exact.
            *p = Vec3::new(p.x as f32 as f64, p.y as f32 as f64, p.z as f32 as f64);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pfm");
        write_pfm_rgb(&img, &path).unwrap();
        let back = read_pfm_rgb(&path).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn gray_round_trip_is_exact_in_f32() {
        let mut rng = crate::oracle::rng(32);
        let mut img = ImageGray::filled(4, 9, 0.0);
        for p in &mut img.pixels {
            *p = rng.gen_range(0.0..1.0f32) as f64;
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pfm");
        write_pfm_gray(&img, &path).unwrap();
        let back = read_pfm_gray(&path).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pfm");
        write_pfm_gray(&ImageGray::filled(2, 2, 0.5), &path).unwrap();
        assert!(read_pfm_rgb(&path).is_err());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pfm");
        std::fs::write(&path, b"P6\n2 2\n255\n").unwrap();
        assert!(read_pfm_rgb(&path).is_err());
    }

    #[test]
    fn writes_are_byte_identical(){
        let mut img = ImageRgb::filled(3, 2, Vec3::new(0.25, 0.5, 0.75));
        img.set(1, 0, Vec3::new(1.0, 2.0, 3.0));
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.pfm");
        let b = dir.path().join("b.pfm");
        write_pfm_rgb(&img, &a).unwrap();
        write_pfm_rgb(&img, &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }
}
