//! Analytic B-scan scenes: buried cylinders seen as Ricker-wavelet hyperbolas.
//!
//! Each pipe contributes `reflectivity / max(1, r) * ricker(t - t(x))` per
//! trace, where `r` is the one-way distance from the antenna to the pipe
//! surface and `t(x)` the two-way travel time. Noise and horizontal clutter
//! bands are layered on top. Every scene is a pure function of its `SceneSpec` and
//! seed.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gpr::{to_image, Bscan};
use crate::image::encode_png;
use crate::image::BitDepth;

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 2.998e8;

/// Ricker lobes beyond this many periods from the peak are below 1e-3.
const WAVELET_SUPPORT_PERIODS: f64 = 1.5;
/// Half-duration (in periods) used for box extents; |ricker| < 0.05 beyond it.
const WAVELET_HALF_SPAN_PERIODS: f64 = 0.7;

/// Standard Ricker wavelet, peak 1 at `t = 0`.
pub fn ricker(f: f64, t: f64) -> f64 {
    let a = (PI * f * t).powi(2);
    (1.0 - 2.0 * a) * (-a).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeSpec {
    /// Horizontal center (m).
    pub x_c: f64,
    /// Depth of the center (m).
    pub y_c: f64,
    pub diameter: f64,
    pub reflectivity: f64,
}

impl PipeSpec {
    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }
}

/// Two-way travel time from antenna position `x` to the nearest point of the pipe surface.
pub fn hyperbola_traveltime(p: &PipeSpec, x: f64, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::invalid("velocity must be positive"));
    }
    let dist = (x - p.x_c).hypot(p.y_c);
    if dist < p.radius() {
        return Err(Error::Geometry(format!(
            "antenna at x = {x} m lies inside the pipe radius"
        )));
    }
    Ok(2.0 * (dist - p.radius()) / v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: f64,
    pub depth: f64,
    pub n_traces: usize,
    pub trace_spacing: f64,
    pub center_freq: f64,
    pub rel_permittivity: f64,
    pub dt: f64,
    pub n_samples: usize,
    pub noise_rms: f64,
    pub clutter_bands: usize,
    pub pipes: Vec<PipeSpec>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 16.0,
            depth: 6.0,
            n_traces: 456,
            trace_spacing: 0.024,
            center_freq: 350e6,
            rel_permittivity: 9.0,
            dt: 0.25e-9,
            n_samples: 512,
            noise_rms: 0.0,
            clutter_bands: 0,
            pipes: Vec::new(),
        }
    }
}

impl SceneSpec {
    pub fn velocity(&self) -> f64 {
        C0 / self.rel_permittivity.sqrt()
    }

    /// Horizontal extent covered by the antenna positions `0 .. n_traces - 1`.
    pub fn aperture(&self) -> f64 {
        (self.n_traces.saturating_sub(1)) as f64 * self.trace_spacing
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("width", self.width),
            ("depth", self.depth),
            ("trace_spacing", self.trace_spacing),
            ("center_freq", self.center_freq),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_traces == 0 || self.n_samples < 2 {
            return Err(Error::invalid("scene needs >= 1 trace and >= 2 samples"));
        }
        if self.n_traces as f64 * self.trace_spacing > self.width * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "{} traces at {} m exceed the scene width {} m",
                self.n_traces, self.trace_spacing, self.width
            )));
        }
        if !(self.rel_permittivity >= 1.0) {
            return Err(Error::invalid("relative permittivity must be >= 1"));
        }
        if !(self.noise_rms >= 0.0) {
            return Err(Error::invalid("noise_rms must be >= 0"));
        }
        let needed = 2.0 * self.depth / self.velocity();
        if (self.n_samples as f64) * self.dt < needed {
            return Err(Error::invalid(format!(
                "time window {:.3e} s too short for depth {} m (needs {:.3e} s)",
                self.n_samples as f64 * self.dt,
                self.depth,
                needed
            )));
        }
        for p in &self.pipes {
            self.validate_pipe(p)?;
        }
        Ok(())
    }

    fn validate_pipe(&self, p: &PipeSpec) -> Result<()> {
        if !(p.diameter > 0.0) || !(p.reflectivity > 0.0 && p.reflectivity <= 1.0) {
            return Err(Error::Geometry(format!("bad pipe parameters {p:?}")));
        }
        if !(p.y_c > p.radius()) || p.y_c + p.radius() > self.depth {
            return Err(Error::Geometry(format!("pipe at depth {} m outside the scene", p.y_c)));
        }
        if !(0.0..=self.aperture()).contains(&p.x_c) {
            return Err(Error::Geometry(format!(
                "pipe at x = {} m outside the survey aperture [0, {}] m",
                p.x_c,
                self.aperture()
            )));
        }
        Ok(())
    }
}

/// A YOLO-style box: class and center/size normalized to the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthBox {
    pub class_id: u32,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl GroundTruthBox {
    /// From a pixel-space center/size box in an `img_w x img_h` image.
    pub fn from_pixels(cx: f64, cy: f64, w: f64, h: f64, img_w: usize, img_h: usize) -> Self {
        let (iw, ih) = (img_w as f64, img_h as f64);
        Self {
            class_id: 0,
            cx: cx / iw,
            cy: cy / ih,
            w: w / iw,
            h: h / ih,
        }
    }

    pub fn is_valid(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        unit(self.cx) && unit(self.cy) && unit(self.w) && unit(self.h) && self.w > 0.0 && self.h > 0.0
    }

    /// Corners `(x1, y1, x2, y2)` in normalized coordinates.
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (
            self.cx - 0.5 * self.w,
            self.cy - 0.5 * self.h,
            self.cx + 0.5 * self.w,
            self.cy + 0.5 * self.h,
        )
    }

    /// Corners in pixel coordinates of an `img_w x img_h` image.
    pub fn pixel_corners(&self, img_w: usize, img_h: usize) -> (f64, f64, f64, f64) {
        let (x1, y1, x2, y2) = self.corners();
        let (iw, ih) = (img_w as f64, img_h as f64);
        (x1 * iw, y1 * ih, x2 * iw, y2 * ih)
    }
}

fn pipe_box(s: &SceneSpec, p: &PipeSpec) -> Result<GroundTruthBox> {
    let v = s.velocity();
    let period = 1.0 / s.center_freq;
    let window = s.n_samples as f64 * s.dt;
    let amp = |x: f64| -> Result<f64> {
        let r = 0.5 * v * hyperbola_traveltime(p, x, v)?;
        Ok(p.reflectivity / r.max(1.0))
    };
    let apex_amp = amp(p.x_c)?;
    // walk outward one trace at a time while the arrival is visible
    let mut half = 0.0;
    loop {
        let dx = half + s.trace_spacing;
        if dx > s.aperture() {
            break;
        }
        let t = hyperbola_traveltime(p, p.x_c + dx, v)?;
        if amp(p.x_c + dx)? < 0.1 * apex_amp || t > window {
            break;
        }
        half = dx;
    }
    // keep the box symmetric about the apex column
    let apex_px = p.x_c / s.trace_spacing + 0.5;
    let n = s.n_traces as f64;
    let half_px = (half / s.trace_spacing).min(apex_px).min(n - apex_px).max(0.5);
    let edge_dx = (half_px * s.trace_spacing).min(half);
    let span = WAVELET_HALF_SPAN_PERIODS * period;
    let top = (hyperbola_traveltime(p, p.x_c, v)? - span).max(0.0);
    let bottom = (hyperbola_traveltime(p, p.x_c + edge_dx, v)? + span).min(window);
    let to_row = |t: f64| t / s.dt;
    let (y1, y2) = (to_row(top), to_row(bottom).max(to_row(top) + 1.0).min(s.n_samples as f64));
    Ok(GroundTruthBox::from_pixels(
        apex_px,
        0.5 * (y1 + y2),
        2.0 * half_px,
        y2 - y1,
        s.n_traces,
        s.n_samples,
    ))
}

/// Adds one pipe's hyperbola to `data` (row-major `n_samples x n_traces`).
fn add_pipe(s: &SceneSpec, p: &PipeSpec, data: &mut [f64]) -> Result<()> {
    let v = s.velocity();
    let support = WAVELET_SUPPORT_PERIODS / s.center_freq;
    for j in 0..s.n_traces {
        let x = j as f64 * s.trace_spacing;
        let t0 = hyperbola_traveltime(p, x, v)?;
        let r = 0.5 * v * t0;
        let amp = p.reflectivity / r.max(1.0);
        let lo = ((t0 - support) / s.dt).floor().max(0.0) as usize;
        let hi = (((t0 + support) / s.dt).ceil() as usize).min(s.n_samples - 1);
        for i in lo..=hi {
            let t = i as f64 * s.dt;
            data[i * s.n_traces + j] += amp * ricker(s.center_freq, t - t0);
        }
    }
    Ok(())
}

/// Renders a scene and one ground-truth box per pipe.
pub fn render_scene(s: &SceneSpec, seed: u64) -> Result<(Bscan, Vec<GroundTruthBox>)> {
    s.validate()?;
    let mut data = vec![0.0; s.n_samples * s.n_traces];
    let mut boxes = Vec::with_capacity(s.pipes.len());
    for p in &s.pipes {
        add_pipe(s, p, &mut data)?;
        boxes.push(pipe_box(s, p)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    for _ in 0..s.clutter_bands {
        let row = rng.random_range(0..s.n_samples);
        let thickness = rng.random_range(1..=3usize);
        let amp = rng.random_range(0.02..0.08) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        for i in row..(row + thickness).min(s.n_samples) {
            data[i * s.n_traces..(i + 1) * s.n_traces]
                .iter_mut()
                .for_each(|v| *v += amp);
        }
    }
    if s.noise_rms > 0.0 {
        let normal = Normal::new(0.0, s.noise_rms).map_err(|e| Error::invalid(e.to_string()))?;
        for v in data.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    let bscan = Bscan::new(s.n_samples, s.n_traces, s.dt, s.trace_spacing, data)?;
    Ok((bscan, boxes))
}

/// Sampling ranges for randomized scenes.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    /// Template for every scene; its `pipes` list is replaced per item.
    pub scene: SceneSpec,
    pub diameters: Vec<f64>,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub reflectivity_range: (f64, f64),
    pub pipes_per_scene: (usize, usize),
    /// Percentile used when converting B-scans to images.
    pub clip_pct: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            scene: SceneSpec {
                noise_rms: 0.01,
                clutter_bands: 2,
                ..SceneSpec::default()
            },
            diameters: vec![0.3, 0.5, 1.0],
            x_range: (5.0, 11.0),
            y_range: (3.5, 5.3),
            reflectivity_range: (0.5, 1.0),
            pipes_per_scene: (1, 1),
            clip_pct: 99.0,
        }
    }
}

impl DatasetConfig {
    /// Horizontal sampling range clipped to the antenna aperture.
    pub fn effective_x_range(&self) -> (f64, f64) {
        (self.x_range.0.max(0.0), self.x_range.1.min(self.scene.aperture()))
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        let (x0, x1) = self.effective_x_range();
        let ordered = |(a, b): (f64, f64)| a <= b;
        if !ordered((x0, x1)) || !ordered(self.y_range) || !ordered(self.reflectivity_range) {
            return Err(Error::invalid("empty sampling range"));
        }
        if self.diameters.is_empty() || self.pipes_per_scene.0 > self.pipes_per_scene.1 {
            return Err(Error::invalid("no diameters or bad pipes-per-scene range"));
        }
        let d_max = self.diameters.iter().cloned().fold(0.0, f64::max);
        let d_min = self.diameters.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(d_min > 0.0) || self.y_range.0 <= 0.5 * d_max || self.y_range.1 + 0.5 * d_max > self.scene.depth {
            return Err(Error::invalid("depth range does not keep pipes buried inside the scene"));
        }
        if !(self.reflectivity_range.0 > 0.0 && self.reflectivity_range.1 <= 1.0) {
            return Err(Error::invalid("reflectivity range must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Draws the scene for item seed `seed`.
    pub fn sample_scene(&self, seed: u64) -> SceneSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x0, x1) = self.effective_x_range();
        let n_pipes = rng.random_range(self.pipes_per_scene.0..=self.pipes_per_scene.1);
        let uniform = |rng: &mut ChaCha8Rng, (a, b): (f64, f64)| if b > a { rng.random_range(a..=b) } else { a };
        let pipes = (0..n_pipes)
            .map(|_| {
                let diameter = self.diameters[rng.random_range(0..self.diameters.len())];
                PipeSpec {
                    x_c: uniform(&mut rng, (x0, x1)),
                    y_c: uniform(&mut rng, self.y_range),
                    diameter,
                    reflectivity: uniform(&mut rng, self.reflectivity_range),
                }
            })
            .collect();
        SceneSpec {
            pipes,
            ..self.scene.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub index: usize,
    pub seed: u64,
    pub scene: SceneSpec,
    pub bscan_path: PathBuf,
    pub image_path: PathBuf,
    pub label_path: PathBuf,
    pub boxes: Vec<GroundTruthBox>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub manifest_path: PathBuf,
    pub items: Vec<DatasetItem>,
}

pub fn item_stem(index: usize) -> String {
    format!("scene_{index:05}")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Renders `n` scenes with seeds `seed + i` and writes B-scans, images,
/// YOLO labels and `manifest.txt` under `out_dir`.
pub fn generate_dataset(cfg: &DatasetConfig, n: usize, seed: u64, out_dir: &Path) -> Result<DatasetManifest> {
    if n == 0 {
        return Err(Error::invalid("dataset size must be >= 1"));
    }
    cfg.validate()?;
    for sub in ["bscans", "images", "labels"] {
        let dir = out_dir.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let items: Vec<DatasetItem> = (0..n)
        .into_par_iter()
        .map(|i| {
            let item_seed = seed.wrapping_add(i as u64);
            let scene = cfg.sample_scene(item_seed);
            let (bscan, boxes) = render_scene(&scene, item_seed)?;
            let stem = item_stem(i);
            let bscan_path = PathBuf::from("bscans").join(format!("{stem}.gprb"));
            let image_path = PathBuf::from("images").join(format!("{stem}.png"));
            let label_path = PathBuf::from("labels").join(format!("{stem}.txt"));
            write_file(&out_dir.join(&bscan_path), &bscan.to_bytes())?;
            let img = to_image(&bscan, cfg.clip_pct)?;
            write_file(&out_dir.join(&image_path), &encode_png(&img, BitDepth::Eight)?)?;
            write_file(&out_dir.join(&label_path), crate::export::yolo_label_text(&boxes).as_bytes())?;
            Ok(DatasetItem {
                index: i,
                seed: item_seed,
                scene,
                bscan_path,
                image_path,
                label_path,
                boxes,
            })
        })
        .collect::<Result<_>>()?;
    let manifest: String = items
        .iter()
        .map(|it| format!("{}\t{}\n", it.image_path.display(), it.label_path.display()))
        .collect();
    let manifest_path = out_dir.join("manifest.txt");
    write_file(&manifest_path, manifest.as_bytes())?;
    Ok(DatasetManifest {
        root: out_dir.to_path_buf(),
        manifest_path,
        items,
    })
}
