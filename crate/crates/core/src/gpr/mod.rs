//! Radar B-scans: the raw `time x trace` record and its signal chain.

mod filters;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub use filters::{
    agc, agc_variants, background_removal, bandpass, to_image, BandpassParams, AGC_EPSILON,
    DEFAULT_AGC_WINDOW_SAMPLES,
};

pub const BSCAN_MAGIC: &[u8; 4] = b"GPRB";
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8;

/// A B-scan: `n_samples` rows (time) by `n_traces` columns (antenna positions).
#[derive(Debug, Clone, PartialEq)]
pub struct Bscan {
    n_samples: usize,
    n_traces: usize,
    /// Sample interval in seconds.
    dt: f64,
    /// Antenna step in meters.
    trace_spacing: f64,
    data: Vec<f64>,
}

impl Bscan {
    pub fn new(n_samples: usize, n_traces: usize, dt: f64, trace_spacing: f64, data: Vec<f64>) -> Result<Self> {
        if n_samples < 2 || n_traces < 1 {
            return Err(Error::invalid(format!(
                "B-scan needs >= 2 samples and >= 1 trace, got {n_samples}x{n_traces}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) || !(trace_spacing > 0.0 && trace_spacing.is_finite()) {
            return Err(Error::invalid("dt and trace_spacing must be positive"));
        }
        if data.len() != n_samples * n_traces {
            return Err(Error::invalid(format!(
                "B-scan data holds {} samples, expected {}",
                data.len(),
                n_samples * n_traces
            )));
        }
        Ok(Self {
            n_samples,
            n_traces,
            dt,
            trace_spacing,
            data,
        })
    }

    pub fn zeros(n_samples: usize, n_traces: usize, dt: f64, trace_spacing: f64) -> Result<Self> {
        Self::new(n_samples, n_traces, dt, trace_spacing, vec![0.0; n_samples * n_traces])
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_traces(&self) -> usize {
        self.n_traces
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn trace_spacing(&self) -> f64 {
        self.trace_spacing
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, sample: usize, trace: usize) -> f64 {
        self.data[sample * self.n_traces + trace]
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        &self.data[sample * self.n_traces..(sample + 1) * self.n_traces]
    }

    pub fn trace(&self, trace: usize) -> Vec<f64> {
        (0..self.n_samples).map(|i| self.get(i, trace)).collect()
    }

    pub(crate) fn with_data(&self, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self { data, ..self.clone() }
    }

    /// Rebuilds a B-scan from per-trace columns.
    pub(crate) fn with_traces(&self, traces: &[Vec<f64>]) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for (j, tr) in traces.iter().enumerate() {
            for (i, &v) in tr.iter().enumerate() {
                data[i * self.n_traces + j] = v;
            }
        }
        self.with_data(data)
    }

    /// Encodes the little-endian `GPRB` container (samples stored as `f32`).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(BSCAN_MAGIC);
        out.extend_from_slice(&(self.n_samples as u32).to_le_bytes());
        out.extend_from_slice(&(self.n_traces as u32).to_le_bytes());
        out.extend_from_slice(&self.dt.to_le_bytes());
        out.extend_from_slice(&self.trace_spacing.to_le_bytes());
        for &v in &self.data {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != BSCAN_MAGIC {
            return Err(Error::parse("B-scan container", "missing GPRB header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let (ns, nt) = (u32_at(4), u32_at(8));
        let (dt, spacing) = (f64_at(12), f64_at(20));
        let body = &bytes[HEADER_LEN..];
        if body.len() != 4 * ns * nt {
            return Err(Error::parse(
                "B-scan container",
                format!("expected {} sample bytes, found {}", 4 * ns * nt, body.len()),
            ));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect();
        Self::new(ns, nt, dt, spacing, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    /// Parses CSV text where each line is one time sample and each column a trace.
    pub fn from_csv(text: &str, dt: f64, trace_spacing: f64) -> Result<Self> {
        let mut data = Vec::new();
        let mut width = None;
        let mut rows = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let before = data.len();
            for field in line.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::parse("B-scan CSV", format!("line {}: bad number {field:?}", lineno + 1))
                })?;
                data.push(v);
            }
            let n = data.len() - before;
            match width {
                None => width = Some(n),
                Some(w) if w != n => {
                    return Err(Error::parse(
                        "B-scan CSV",
                        format!("line {}: expected {w} columns, found {n}", lineno + 1),
                    ))
                }
                _ => {}
            }
            rows += 1;
        }
        Self::new(rows, width.unwrap_or(0), dt, trace_spacing, data)
    }
}
