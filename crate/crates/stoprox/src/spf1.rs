//! Lossless float images: an ASCII line `SPF1 <width> <height>` followed by
//! row-major little-endian `f64` samples.

use std::fs;
use std::path::Path;

use stoprox_core::Image;

use crate::error::{Error, Result};

pub fn encode_spf1(image: &Image) -> Vec<u8> {
    let mut out = format!("SPF1 {} {}\n", image.width, image.height).into_bytes();
    out.reserve(image.data.len() * 8);
    for v in &image.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_spf1(bytes: &[u8]) -> std::result::Result<Image, String> {
    let nl = bytes.iter().position(|b| *b == b'\n').ok_or("missing header line")?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| "header is not ASCII")?;
    let mut parts = header.split_ascii_whitespace();
    if parts.next() != Some("SPF1") {
        return Err("missing SPF1 magic".into());
    }
    let mut dim = |name: &str| -> std::result::Result<usize, String> {
        parts
            .next()
            .ok_or(format!("missing {name}"))?
            .parse()
            .map_err(|_| format!("bad {name}"))
    };
    let (width, height) = (dim("width")?, dim("height")?);
    let body = &bytes[nl + 1..];
    if body.len() != width * height * 8 {
        return Err(format!("expected {} data bytes, found {}", width * height * 8, body.len()));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Image::new(width, height, data).map_err(|e| e.to_string())
}

pub fn write_spf1(path: &Path, image: &Image) -> Result<()> {
    fs::write(path, encode_spf1(image)).map_err(|e| Error::io(path, e))
}

pub fn read_spf1(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_spf1(&bytes).map_err(|m| Error::format(path, m))
}
