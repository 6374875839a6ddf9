//! Reading and writing 8-bit gray images as binary PGM or PNG.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imagecore::GrayImage;

fn skip_space_and_comments(data: &[u8], mut i: usize) -> usize {
    loop {
        while i < data.len() && data[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < data.len() && data[i] == b'#' {
            while i < data.len() && data[i] != b'\n' {
                i += 1;
            }
        } else {
            return i;
        }
    }
}

fn header_number(data: &[u8], i: &mut usize, what: &str) -> Result<usize> {
    *i = skip_space_and_comments(data, *i);
    let start = *i;
    while *i < data.len() && data[*i].is_ascii_digit() {
        *i += 1;
    }
    std::str::from_utf8(&data[start..*i])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Pgm(format!("missing or bad {what}")))
}

/// Parses a binary (`P5`) PGM with a maximum value of at most 255.
pub fn decode_pgm(data: &[u8]) -> Result<GrayImage> {
    if !data.starts_with(b"P5") {
        return Err(Error::Pgm("not a binary PGM (expected P5 magic)".into()));
    }
    let mut i = 2;
    let width = header_number(data, &mut i, "width")?;
    let height = header_number(data, &mut i, "height")?;
    let maxval = header_number(data, &mut i, "maximum value")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Pgm(format!("unsupported maximum value {maxval}")));
    }
    if i >= data.len() || !data[i].is_ascii_whitespace() {
        return Err(Error::Pgm("header not terminated".into()));
    }
    i += 1;
    let n = width * height;
    let body = data
        .get(i..i + n)
        .ok_or_else(|| Error::Pgm(format!("expected {n} pixel bytes, found {}", data.len() - i)))?;
    let pixels = if maxval == 255 {
        body.to_vec()
    } else {
        body.iter()
            .map(|&v| ((u32::from(v.min(maxval as u8)) * 255 + maxval as u32 / 2) / maxval as u32) as u8)
            .collect()
    };
    GrayImage::new(width, height, pixels)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Loads a PGM or PNG (by extension); color PNGs are converted to luma.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let decode_err = |message: String| Error::Decode {
        path: path.to_path_buf(),
        message,
    };
    if is_png(path) {
        let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
            .map_err(|e| decode_err(e.to_string()))?
            .to_rgb8();
        let (w, h) = img.dimensions();
        GrayImage::from_rgb(w as usize, h as usize, img.as_raw())
    } else {
        decode_pgm(&bytes).map_err(|e| decode_err(e.to_string()))
    }
}

/// Saves as PNG when the extension says so, otherwise as binary PGM.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if is_png(path) {
        let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.pixels().to_vec())
            .ok_or(Error::EmptyImage)?;
        buf.save_with_format(path, image::ImageFormat::Png).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    } else {
        fs::write(path, encode_pgm(img))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_with_comments() {
        let img = GrayImage::from_fn(5, 3, |x, y| (x * 40 + y) as u8);
        let bytes = encode_pgm(&img);
        assert_eq!(decode_pgm(&bytes).unwrap(), img);
        let mut commented = b"P5 # made by hand\n5 # width\n3\n255\n".to_vec();
        commented.extend_from_slice(img.pixels());
        assert_eq!(decode_pgm(&commented).unwrap(), img);
    }

    #[test]
    fn pgm_rescales_small_maxval() {
        let mut data = b"P5\n2 1\n15\n".to_vec();
        data.extend_from_slice(&[0, 15]);
        assert_eq!(decode_pgm(&data).unwrap().pixels(), &[0, 255]);
    }

    #[test]
    fn malformed_pgm() {
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n4 4\n255\n\x00\x01").is_err());
        assert!(decode_pgm(b"P5\n4\n").is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(7, 4, |x, y| (x * 30 + y * 7) as u8);
        let p = dir.path().join("a.png");
        save_image(&img, &p).unwrap();
        assert_eq!(load_image(&p).unwrap(), img);
        let q = dir.path().join("a.pgm");
        save_image(&img, &q).unwrap();
        assert_eq!(load_image(&q).unwrap(), img);
    }
}
