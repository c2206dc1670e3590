//! Lifetime-weighted rendering of H1 generators and fusion with the source image.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::cubical::{build_sublevel_complex, Grid};
use crate::error::{Error, Result};
use crate::image::{self, BitDepth, GrayImage};
use crate::persistence::{compute_persistence_with, PersistenceDiagram, PersistencePair, Reduction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RenderMode {
    /// Pixels on the representative cycle.
    #[default]
    Boundary,
    /// Cycle pixels plus everything they enclose.
    Filled,
}

impl FromStr for RenderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boundary" => Ok(Self::Boundary),
            "filled" => Ok(Self::Filled),
            other => Err(Error::invalid(format!("unknown render mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for RenderMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RenderMode::Boundary => "boundary",
            RenderMode::Filled => "filled",
        })
    }
}

/// Per-pixel generator intensity in `[0, 1]`, same shape as the source image.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl ShapeMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage::new(self.width, self.height, self.values.clone()).expect("shape map values lie in [0, 1]")
    }
}

/// A generator as drawn into a [`ShapeMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedGenerator {
    /// Index into the diagram's pair list.
    pub pair_index: usize,
    pub lifetime: f64,
    pub intensity: f64,
    /// Row-major pixel indices.
    pub pixels: Vec<usize>,
    /// `(min_row, min_col, max_row, max_col)`, inclusive.
    pub bbox: (usize, usize, usize, usize),
}

/// Pixel indices touched by a dimension-1 pair's representative cycle.
pub fn generator_pixels(pair: &PersistencePair, grid: Grid, mode: RenderMode) -> Vec<usize> {
    let mut pixels: Vec<usize> = pair
        .rep_cycle
        .iter()
        .flat_map(|&e| grid.pixels(e))
        .map(|(r, c)| r * grid.width + c)
        .collect();
    pixels.sort_unstable();
    pixels.dedup();
    if mode == RenderMode::Filled && !pixels.is_empty() {
        pixels.extend(enclosed_pixels(&pixels, grid.width));
        pixels.sort_unstable();
    }
    pixels
}

/// Flood-fills from outside the cycle mask's padded bounding box; whatever
/// the fill cannot reach (and is not on the mask) is enclosed.
fn enclosed_pixels(mask: &[usize], width: usize) -> Vec<usize> {
    let (mut r0, mut c0, mut r1, mut c1) = (usize::MAX, usize::MAX, 0, 0);
    for &p in mask {
        let (r, c) = (p / width, p % width);
        r0 = r0.min(r);
        c0 = c0.min(c);
        r1 = r1.max(r);
        c1 = c1.max(c);
    }
    // local frame with a one-pixel margin on every side
    let (lw, lh) = (c1 - c0 + 3, r1 - r0 + 3);
    let mut state = vec![0u8; lw * lh]; // 0 unknown, 1 mask, 2 outside
    for &p in mask {
        let (r, c) = (p / width - r0 + 1, p % width - c0 + 1);
        state[r * lw + c] = 1;
    }
    let mut queue = VecDeque::from([0usize]);
    state[0] = 2;
    while let Some(i) = queue.pop_front() {
        let (r, c) = (i / lw, i % lw);
        let mut visit = |j: usize| {
            if state[j] == 0 {
                state[j] = 2;
                queue.push_back(j);
            }
        };
        if r > 0 {
            visit(i - lw);
        }
        if r + 1 < lh {
            visit(i + lw);
        }
        if c > 0 {
            visit(i - 1);
        }
        if c + 1 < lw {
            visit(i + 1);
        }
    }
    state
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == 0)
        .map(|(i, _)| {
            let (r, c) = (i / lw + r0 - 1, i % lw + c0 - 1);
            r * width + c
        })
        .collect()
}

/// Finite dimension-1 pairs with positive lifetime of at least `min_lifetime`,
/// each with intensity `lifetime / max_lifetime`.
pub fn rendered_generators(
    d: &PersistenceDiagram,
    dims: (usize, usize),
    mode: RenderMode,
    min_lifetime: f64,
) -> Result<Vec<RenderedGenerator>> {
    if dims != d.source_dims {
        return Err(Error::DimensionMismatch {
            expected: d.source_dims,
            got: dims,
        });
    }
    if !(min_lifetime >= 0.0) {
        return Err(Error::invalid(format!("min_lifetime {min_lifetime} must be >= 0")));
    }
    let grid = Grid::new(dims.0, dims.1);
    let survivors: Vec<(usize, &PersistencePair)> = d
        .pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.dim == 1 && !p.is_essential())
        .filter(|(_, p)| p.lifetime() > 0.0 && p.lifetime() >= min_lifetime)
        .collect();
    let max_life = survivors.iter().map(|(_, p)| p.lifetime()).fold(0.0, f64::max);
    Ok(survivors
        .into_iter()
        .map(|(pair_index, p)| {
            let pixels = generator_pixels(p, grid, mode);
            let bbox = pixels.iter().fold((usize::MAX, usize::MAX, 0, 0), |b, &i| {
                let (r, c) = (i / grid.width, i % grid.width);
                (b.0.min(r), b.1.min(c), b.2.max(r), b.3.max(c))
            });
            RenderedGenerator {
                pair_index,
                lifetime: p.lifetime(),
                intensity: p.lifetime() / max_life,
                pixels,
                bbox,
            }
        })
        .collect())
}

pub fn render_shape_map(
    d: &PersistenceDiagram,
    dims: (usize, usize),
    mode: RenderMode,
    min_lifetime: f64,
) -> Result<ShapeMap> {
    let generators = rendered_generators(d, dims, mode, min_lifetime)?;
    Ok(paint(&generators, dims))
}

fn paint(generators: &[RenderedGenerator], dims: (usize, usize)) -> ShapeMap {
    let mut map = ShapeMap::zeros(dims.0, dims.1);
    for g in generators {
        for &p in &g.pixels {
            map.values[p] = map.values[p].max(g.intensity);
        }
    }
    map
}

/// Side-car listing: `lifetime,intensity,pixel_count,min_row,min_col,max_row,max_col`.
pub fn generators_csv(generators: &[RenderedGenerator]) -> String {
    let mut out = String::from("lifetime,intensity,pixel_count,min_row,min_col,max_row,max_col\n");
    for g in generators {
        let (r0, c0, r1, c1) = g.bbox;
        let _ = writeln!(
            out,
            "{},{},{},{r0},{c0},{r1},{c1}",
            g.lifetime,
            g.intensity,
            g.pixels.len()
        );
    }
    out
}

/// Three planes: raw image, shape map, and `alpha * raw + (1 - alpha) * topo`.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedImage {
    pub width: usize,
    pub height: usize,
    pub raw: Vec<f64>,
    pub topo: Vec<f64>,
    pub blend: Vec<f64>,
    pub alpha: f64,
}

impl FusedImage {
    /// RGB PNG with R = raw, G = topo, B = blend.
    pub fn to_png_rgb(&self) -> Result<Vec<u8>> {
        image::encode_png_rgb(self.width, self.height, [&self.raw, &self.topo, &self.blend])
    }

    /// Single-channel PNG of the blend plane.
    pub fn to_png_blend(&self) -> Result<Vec<u8>> {
        let img = GrayImage::new(self.width, self.height, self.blend.clone())?;
        image::encode_png(&img, BitDepth::Eight)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

pub fn fuse(raw: &GrayImage, topo: &ShapeMap, alpha: f64) -> Result<FusedImage> {
    if raw.dims() != (topo.width, topo.height) {
        return Err(Error::DimensionMismatch {
            expected: raw.dims(),
            got: (topo.width, topo.height),
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha {alpha} outside [0, 1]")));
    }
    let blend = raw
        .pixels()
        .iter()
        .zip(&topo.values)
        .map(|(&r, &t)| (alpha * r + (1.0 - alpha) * t).clamp(0.0, 1.0))
        .collect();
    Ok(FusedImage {
        width: topo.width,
        height: topo.height,
        raw: raw.pixels().to_vec(),
        topo: topo.values.clone(),
        blend,
        alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopoConfig {
    pub invert: bool,
    /// Quantization levels; `None` keeps the input values.
    pub quantize: Option<u32>,
    pub min_lifetime: f64,
    pub mode: RenderMode,
    pub alpha: f64,
    pub reduction: Reduction,
}

impl Default for TopoConfig {
    fn default() -> Self {
        Self {
            invert: false,
            quantize: None,
            min_lifetime: 0.0,
            mode: RenderMode::Boundary,
            alpha: 0.5,
            reduction: Reduction::Twist,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TopoOutput {
    pub fused: FusedImage,
    pub shape_map: ShapeMap,
    /// Full diagram, zero-persistence pairs included.
    pub diagram: PersistenceDiagram,
    pub generators: Vec<RenderedGenerator>,
}

/// Invert/quantize, filter, reduce, render, fuse. The raw plane of the
/// output is the input image as given.
pub fn topo_pipeline(img: &GrayImage, cfg: &TopoConfig) -> Result<TopoOutput> {
    let mut filtered = if cfg.invert { image::invert(img) } else { img.clone() };
    if let Some(levels) = cfg.quantize {
        filtered = image::quantize(&filtered, levels)?;
    }
    let complex = build_sublevel_complex(&filtered);
    let diagram = compute_persistence_with(&complex, cfg.reduction)?;
    let generators = rendered_generators(&diagram, img.dims(), cfg.mode, cfg.min_lifetime)?;
    let shape_map = paint(&generators, img.dims());
    let fused = fuse(img, &shape_map, cfg.alpha)?;
    Ok(TopoOutput {
        fused,
        shape_map,
        diagram,
        generators,
    })
}
