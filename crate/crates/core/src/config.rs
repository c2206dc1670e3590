//! `key = value` pipeline configuration.
//!
//! Precedence is defaults, then a config file, then command-line overrides.
//! Unknown keys are rejected. [`PipelineConfig::dump`] writes every key, so a
//! dumped file reproduces a run exactly.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gpr::{BandpassParams, DEFAULT_AGC_WINDOW_SAMPLES};
use crate::persistence::Reduction;
use crate::shape_map::{RenderMode, TopoConfig};
use crate::synth::DatasetConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,

    // synthetic scenes
    pub n_traces: usize,
    pub trace_spacing: f64,
    pub n_samples: usize,
    pub dt: f64,
    pub center_freq: f64,
    pub rel_permittivity: f64,
    pub noise_rms: f64,
    pub clutter_bands: usize,
    pub pipes_min: usize,
    pub pipes_max: usize,

    // preprocessing
    pub background_removal: bool,
    pub bandpass: bool,
    pub f_lo: f64,
    pub f_hi: f64,
    pub taper_frac: f64,
    /// AGC window lengths in samples; empty disables AGC.
    pub agc_windows: Vec<usize>,
    pub agc_target: f64,
    pub clip_pct: f64,

    // topology
    pub invert: bool,
    /// Quantization levels, 0 for none.
    pub quantize: u32,
    pub min_lifetime: f64,
    pub mode: RenderMode,
    pub alpha: f64,
    pub reduction: Reduction,
    pub blend_only: bool,
    pub luma: bool,

    // export
    pub train_frac: f64,
    pub seed: u64,

    /// Worker threads, 0 for automatic.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let ds = DatasetConfig::default();
        let bp = BandpassParams::default();
        let topo = TopoConfig::default();
        Self {
            input: None,
            output: None,
            n_traces: ds.scene.n_traces,
            trace_spacing: ds.scene.trace_spacing,
            n_samples: ds.scene.n_samples,
            dt: ds.scene.dt,
            center_freq: ds.scene.center_freq,
            rel_permittivity: ds.scene.rel_permittivity,
            noise_rms: ds.scene.noise_rms,
            clutter_bands: ds.scene.clutter_bands,
            pipes_min: ds.pipes_per_scene.0,
            pipes_max: ds.pipes_per_scene.1,
            background_removal: true,
            bandpass: true,
            f_lo: bp.f_lo,
            f_hi: bp.f_hi,
            taper_frac: bp.taper_frac,
            agc_windows: DEFAULT_AGC_WINDOW_SAMPLES.to_vec(),
            agc_target: 1.0,
            clip_pct: ds.clip_pct,
            invert: topo.invert,
            quantize: 0,
            min_lifetime: topo.min_lifetime,
            mode: topo.mode,
            alpha: topo.alpha,
            reduction: topo.reduction,
            blend_only: false,
            luma: false,
            train_frac: 0.7,
            seed: 0,
            threads: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse("config", format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::parse("config", format!("bad boolean {value:?} for {key}"))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

fn reduction_name(r: Reduction) -> &'static str {
    match r {
        Reduction::Standard => "standard",
        Reduction::Twist => "twist",
    }
}

impl PipelineConfig {
    pub const KEYS: &'static [&'static str] = &[
        "input", "output", "n_traces", "trace_spacing", "n_samples", "dt", "center_freq",
        "rel_permittivity", "noise_rms", "clutter_bands", "pipes_min", "pipes_max",
        "background_removal", "bandpass", "f_lo", "f_hi", "taper_frac", "agc_windows",
        "agc_target", "clip_pct", "invert", "quantize", "min_lifetime", "mode", "alpha",
        "reduction", "blend_only", "luma", "train_frac", "seed", "threads",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "input" => self.input = (!v.is_empty()).then(|| PathBuf::from(v)),
            "output" => self.output = (!v.is_empty()).then(|| PathBuf::from(v)),
            "n_traces" => self.n_traces = parse(key, v)?,
            "trace_spacing" => self.trace_spacing = parse(key, v)?,
            "n_samples" => self.n_samples = parse(key, v)?,
            "dt" => self.dt = parse(key, v)?,
            "center_freq" => self.center_freq = parse(key, v)?,
            "rel_permittivity" => self.rel_permittivity = parse(key, v)?,
            "noise_rms" => self.noise_rms = parse(key, v)?,
            "clutter_bands" => self.clutter_bands = parse(key, v)?,
            "pipes_min" => self.pipes_min = parse(key, v)?,
            "pipes_max" => self.pipes_max = parse(key, v)?,
            "background_removal" => self.background_removal = parse_bool(key, v)?,
            "bandpass" => self.bandpass = parse_bool(key, v)?,
            "f_lo" => self.f_lo = parse(key, v)?,
            "f_hi" => self.f_hi = parse(key, v)?,
            "taper_frac" => self.taper_frac = parse(key, v)?,
            "agc_windows" => self.agc_windows = parse_list(key, v)?,
            "agc_target" => self.agc_target = parse(key, v)?,
            "clip_pct" => self.clip_pct = parse(key, v)?,
            "invert" => self.invert = parse_bool(key, v)?,
            "quantize" => self.quantize = parse(key, v)?,
            "min_lifetime" => self.min_lifetime = parse(key, v)?,
            "mode" => self.mode = v.parse()?,
            "alpha" => self.alpha = parse(key, v)?,
            "reduction" => self.reduction = v.parse()?,
            "blend_only" => self.blend_only = parse_bool(key, v)?,
            "luma" => self.luma = parse_bool(key, v)?,
            "train_frac" => self.train_frac = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "threads" => self.threads = parse(key, v)?,
            other => return Err(Error::parse("config", format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` assignment.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::parse("config", format!("expected key=value, got {assignment:?}")))?;
        self.set(k.trim(), v)
    }

    /// Applies config text: one `key = value` per line, `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_assignment(line).map_err(|e| match e {
                Error::Parse { msg, .. } => Error::parse("config", format!("line {}: {msg}", i + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_str(&text)
    }

    fn value_of(&self, key: &str) -> String {
        fn s(v: impl Display) -> String {
            v.to_string()
        }
        match key {
            "input" => opt_path(&self.input),
            "output" => opt_path(&self.output),
            "n_traces" => s(self.n_traces),
            "trace_spacing" => s(self.trace_spacing),
            "n_samples" => s(self.n_samples),
            "dt" => s(self.dt),
            "center_freq" => s(self.center_freq),
            "rel_permittivity" => s(self.rel_permittivity),
            "noise_rms" => s(self.noise_rms),
            "clutter_bands" => s(self.clutter_bands),
            "pipes_min" => s(self.pipes_min),
            "pipes_max" => s(self.pipes_max),
            "background_removal" => s(self.background_removal),
            "bandpass" => s(self.bandpass),
            "f_lo" => s(self.f_lo),
            "f_hi" => s(self.f_hi),
            "taper_frac" => s(self.taper_frac),
            "agc_windows" => self.agc_windows.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(","),
            "agc_target" => s(self.agc_target),
            "clip_pct" => s(self.clip_pct),
            "invert" => s(self.invert),
            "quantize" => s(self.quantize),
            "min_lifetime" => s(self.min_lifetime),
            "mode" => s(self.mode),
            "alpha" => s(self.alpha),
            "reduction" => reduction_name(self.reduction).to_owned(),
            "blend_only" => s(self.blend_only),
            "luma" => s(self.luma),
            "train_frac" => s(self.train_frac),
            "seed" => s(self.seed),
            "threads" => s(self.threads),
            _ => unreachable!("key list and match arms disagree on {key}"),
        }
    }

    /// Every key, one `key = value` line each.
    pub fn dump(&self) -> String {
        Self::KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.value_of(k)))
            .collect()
    }

    /// Like [`dump`](Self::dump) minus paths and thread count, so runs that
    /// differ only in where or how wide they execute record the same text.
    pub fn dump_settings(&self) -> String {
        Self::KEYS
            .iter()
            .filter(|k| !matches!(**k, "input" | "output" | "threads"))
            .map(|k| format!("{k} = {}\n", self.value_of(k)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset_config().validate()?;
        if !(self.clip_pct > 50.0 && self.clip_pct <= 100.0) {
            return Err(Error::invalid("clip_pct must lie in (50, 100]"));
        }
        if self.agc_windows.iter().any(|&w| w < 3) || !(self.agc_target > 0.0) {
            return Err(Error::invalid("AGC windows need >= 3 samples and a positive target"));
        }
        if self.bandpass && !(self.f_lo >= 0.0 && self.f_lo < self.f_hi && self.f_hi <= 0.5 / self.dt) {
            return Err(Error::invalid("band edges must satisfy 0 <= f_lo < f_hi <= Nyquist"));
        }
        if !(0.0..=0.5).contains(&self.taper_frac) {
            return Err(Error::invalid("taper_frac must lie in [0, 0.5]"));
        }
        if self.quantize == 1 {
            return Err(Error::invalid("quantize needs 0 (off) or >= 2 levels"));
        }
        if !(self.min_lifetime >= 0.0) || !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid("min_lifetime must be >= 0 and alpha in [0, 1]"));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::invalid("train_frac must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn dataset_config(&self) -> DatasetConfig {
        let mut ds = DatasetConfig::default();
        ds.scene.n_traces = self.n_traces;
        ds.scene.trace_spacing = self.trace_spacing;
        ds.scene.n_samples = self.n_samples;
        ds.scene.dt = self.dt;
        ds.scene.center_freq = self.center_freq;
        ds.scene.rel_permittivity = self.rel_permittivity;
        ds.scene.noise_rms = self.noise_rms;
        ds.scene.clutter_bands = self.clutter_bands;
        ds.pipes_per_scene = (self.pipes_min, self.pipes_max);
        ds.clip_pct = self.clip_pct;
        ds
    }

    pub fn bandpass_params(&self) -> BandpassParams {
        BandpassParams {
            f_lo: self.f_lo,
            f_hi: self.f_hi,
            taper_frac: self.taper_frac,
        }
    }

    pub fn topo_config(&self) -> TopoConfig {
        TopoConfig {
            invert: self.invert,
            quantize: (self.quantize >= 2).then_some(self.quantize),
            min_lifetime: self.min_lifetime,
            mode: self.mode,
            alpha: self.alpha,
            reduction: self.reduction,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_roundtrip() {
        let mut cfg = PipelineConfig::default();
        cfg.apply_str("seed = 17\nmode = filled # comment\nagc_windows = 16, 48\ninvert = yes\noutput = /tmp/x\n")
            .unwrap();
        let mut back = PipelineConfig::default();
        back.apply_str(&cfg.dump()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.agc_windows, vec![16, 48]);
        assert_eq!(back.mode, RenderMode::Filled);
    }

    #[test]
    fn every_key_is_dumped() {
        let dump = PipelineConfig::default().dump();
        assert_eq!(dump.lines().count(), PipelineConfig::KEYS.len());
    }

    #[test]
    fn settings_dump_ignores_threads_and_paths() {
        let mut a = PipelineConfig::default();
        a.apply_str("threads = 1\noutput = /tmp/a\n").unwrap();
        let mut b = a.clone();
        b.apply_str("threads = 8\noutput = /tmp/b\n").unwrap();
        assert_eq!(a.dump_settings(), b.dump_settings());
        assert_ne!(a.dump(), b.dump());
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let mut cfg = PipelineConfig::default();
        let err = cfg.apply_str("seed = 1\nfrobnicate = 2\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(err.to_string().contains("frobnicate"));
        assert!(cfg.apply_assignment("seed").is_err());
        assert!(cfg.apply_assignment("invert=maybe").is_err());
    }

    #[test]
    fn validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let bad = PipelineConfig { train_frac: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = PipelineConfig { agc_windows: vec![2], ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = PipelineConfig { f_hi: 3e9, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
