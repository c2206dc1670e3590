//! Grayscale images with intensities in `[0, 1]`, plus PGM/PNG I/O.
//!
//! Every image, whatever its source bit depth, is held as `f64` samples in
//! the unit interval so that the filtration code has a single input type.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};

/// BT.601 luma weights used when `--luma` converts color input.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Row-major grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "pixel buffer holds {} values, expected {}",
                pixels.len(),
                width * height
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("pixel value {bad} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image from a closure over `(row, col)`; values are clamped to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(clamp_unit(f(r, c)));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(width, height, rows.concat())
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
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

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| clamp_unit(f(v))).collect(),
        }
    }
}

fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizeMode {
    MinMax,
    #[default]
    None,
}

impl std::str::FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" => Ok(Self::MinMax),
            "none" => Ok(Self::None),
            other => Err(Error::invalid(format!("unknown normalize mode {other:?}"))),
        }
    }
}

/// Linear min/max stretch. A constant image maps to 0.5 everywhere.
pub fn normalize(img: &GrayImage, mode: NormalizeMode) -> GrayImage {
    match mode {
        NormalizeMode::None => img.clone(),
        NormalizeMode::MinMax => {
            let (lo, hi) = img
                .pixels
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            if hi <= lo {
                img.map(|_| 0.5)
            } else {
                let span = hi - lo;
                img.map(|v| (v - lo) / span)
            }
        }
    }
}

pub fn invert(img: &GrayImage) -> GrayImage {
    img.map(|v| 1.0 - v)
}

/// Snaps every value onto the grid `k / (levels - 1)`.
pub fn quantize(img: &GrayImage, levels: u32) -> Result<GrayImage> {
    if levels < 2 {
        return Err(Error::invalid(format!("quantize needs levels >= 2, got {levels}")));
    }
    let steps = f64::from(levels - 1);
    Ok(img.map(|v| (v * steps).round() / steps))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Convert color PNGs to grayscale with BT.601 weights instead of failing.
    pub luma: bool,
}

/// Reads a PGM (P2/P5) or grayscale PNG, mapping `[0, maxval]` onto `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>, opts: LoadOptions) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        parse_pgm(&bytes)
    } else if bytes.starts_with(b"\x89PNG") {
        decode_png(path, &bytes, opts)
    } else {
        Err(Error::UnsupportedFormat(path.to_path_buf()))
    }
}

fn decode_png(path: &Path, bytes: &[u8], opts: LoadOptions) -> Result<GrayImage> {
    let decoded = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let pixels: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| f64::from(p.0[0]) / 255.0).collect(),
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(|v| f64::from(v) / 65535.0).collect(),
        DynamicImage::ImageLumaA16(buf) => buf.pixels().map(|p| f64::from(p.0[0]) / 65535.0).collect(),
        other => {
            if !opts.luma {
                return Err(Error::ColorInput(path.to_path_buf()));
            }
            let rgb = other.into_rgb32f();
            rgb.pixels()
                .map(|p| {
                    LUMA_WEIGHTS
                        .iter()
                        .zip(p.0.iter())
                        .map(|(w, &c)| w * f64::from(c))
                        .sum::<f64>()
                })
                .collect()
        }
    };
    let pixels = pixels.into_iter().map(clamp_unit).collect();
    GrayImage::new(w, h, pixels)
}

/// Parses PGM bytes (ASCII `P2` or binary `P5`, 8 or 16 bit).
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos).ok_or_else(|| Error::parse("PGM", "missing magic"))?;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        _ => return Err(Error::parse("PGM", "bad magic")),
    };
    let mut header = [0usize; 3];
    for (slot, name) in header.iter_mut().zip(["width", "height", "maxval"]) {
        let tok = next_token(bytes, &mut pos).ok_or_else(|| Error::parse("PGM", format!("missing {name}")))?;
        *slot = parse_usize(tok).ok_or_else(|| Error::parse("PGM", format!("bad {name}")))?;
    }
    let [width, height, maxval] = header;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse("PGM", format!("maxval {maxval} out of range")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::parse("PGM", "dimensions overflow"))?;
    let scale = maxval as f64;
    let mut raw = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let wide = maxval > 255;
        let need = if wide { 2 * n } else { n };
        let body = bytes
            .get(pos..pos + need)
            .ok_or_else(|| Error::parse("PGM", "truncated raster"))?;
        if wide {
            raw.extend(body.chunks_exact(2).map(|c| usize::from(u16::from_be_bytes([c[0], c[1]]))));
        } else {
            raw.extend(body.iter().map(|&b| usize::from(b)));
        }
    } else {
        for _ in 0..n {
            let tok = next_token(bytes, &mut pos).ok_or_else(|| Error::parse("PGM", "truncated raster"))?;
            raw.push(parse_usize(tok).ok_or_else(|| Error::parse("PGM", "bad sample"))?);
        }
    }
    if raw.iter().any(|&v| v > maxval) {
        return Err(Error::parse("PGM", "sample exceeds maxval"));
    }
    GrayImage::new(width, height, raw.into_iter().map(|v| v as f64 / scale).collect())
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

fn parse_usize(tok: &[u8]) -> Option<usize> {
    std::str::from_utf8(tok).ok()?.parse().ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

impl BitDepth {
    fn maxval(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

fn to_levels(img: &GrayImage, depth: BitDepth) -> impl Iterator<Item = u16> + '_ {
    let m = depth.maxval();
    img.pixels.iter().map(move |&v| (v * m).round() as u16)
}

/// Binary PGM (P5) encoding.
pub fn encode_pgm(img: &GrayImage, depth: BitDepth) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, depth.maxval() as u32).into_bytes();
    match depth {
        BitDepth::Eight => out.extend(to_levels(img, depth).map(|v| v as u8)),
        BitDepth::Sixteen => out.extend(to_levels(img, depth).flat_map(u16::to_be_bytes)),
    }
    out
}

pub fn encode_png(img: &GrayImage, depth: BitDepth) -> Result<Vec<u8>> {
    let (w, h) = (img.width as u32, img.height as u32);
    let dynimg = match depth {
        BitDepth::Eight => DynamicImage::ImageLuma8(
            image::GrayImage::from_raw(w, h, to_levels(img, depth).map(|v| v as u8).collect())
                .expect("buffer sized from dimensions"),
        ),
        BitDepth::Sixteen => DynamicImage::ImageLuma16(
            image::ImageBuffer::from_raw(w, h, to_levels(img, depth).collect())
                .expect("buffer sized from dimensions"),
        ),
    };
    let mut buf = Cursor::new(Vec::new());
    dynimg.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

/// Writes an 8-bit RGB PNG from three unit-range planes of equal length.
pub fn encode_png_rgb(width: usize, height: usize, planes: [&[f64]; 3]) -> Result<Vec<u8>> {
    let n = width * height;
    if planes.iter().any(|p| p.len() != n) {
        return Err(Error::invalid("plane length does not match dimensions"));
    }
    let mut raw = Vec::with_capacity(3 * n);
    for i in 0..n {
        for p in &planes {
            raw.push((clamp_unit(p[i]) * 255.0).round() as u8);
        }
    }
    let buf = image::RgbImage::from_raw(width as u32, height as u32, raw).expect("buffer sized from dimensions");
    let mut out = Cursor::new(Vec::new());
    DynamicImage::ImageRgb8(buf).write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// Saves by extension: `.pgm` writes P5, anything else writes PNG.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let bytes = if is_pgm {
        encode_pgm(img, depth)
    } else {
        encode_png(img, depth)?
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
