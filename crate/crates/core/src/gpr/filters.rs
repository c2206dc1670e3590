use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Bscan;
use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Floor on the windowed RMS so silent stretches get a finite gain.
pub const AGC_EPSILON: f64 = 1e-12;

/// Default AGC window lengths, in samples (multiply by `dt` for seconds).
pub const DEFAULT_AGC_WINDOW_SAMPLES: [usize; 5] = [32, 64, 128, 256, 512];

/// Subtracts the mean trace: every time row ends up with zero mean.
pub fn background_removal(b: &Bscan) -> Bscan {
    let nt = b.n_traces();
    let mut data = b.data().to_vec();
    for row in data.chunks_exact_mut(nt) {
        let mean = row.iter().sum::<f64>() / nt as f64;
        row.iter_mut().for_each(|v| *v -= mean);
    }
    b.with_data(data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandpassParams {
    pub f_lo: f64,
    pub f_hi: f64,
    pub taper_frac: f64,
}

impl Default for BandpassParams {
    fn default() -> Self {
        Self {
            f_lo: 100e6,
            f_hi: 1900e6,
            taper_frac: 0.1,
        }
    }
}

impl BandpassParams {
    fn validate(&self, dt: f64) -> Result<()> {
        let nyquist = 0.5 / dt;
        if !(self.f_lo >= 0.0 && self.f_lo < self.f_hi) {
            return Err(Error::invalid(format!(
                "band edges must satisfy 0 <= f_lo < f_hi, got {} / {}",
                self.f_lo, self.f_hi
            )));
        }
        if self.f_hi > nyquist * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "f_hi {} Hz above Nyquist {} Hz",
                self.f_hi, nyquist
            )));
        }
        if !(0.0..=0.5).contains(&self.taper_frac) {
            return Err(Error::invalid(format!(
                "taper_frac {} outside [0, 0.5]",
                self.taper_frac
            )));
        }
        Ok(())
    }

    /// Raised-cosine mask value at absolute frequency `f`.
    pub fn gain(&self, f: f64) -> f64 {
        let f = f.abs();
        let pass_lo = self.f_lo * (1.0 + self.taper_frac);
        let pass_hi = self.f_hi * (1.0 - self.taper_frac);
        if f < self.f_lo || f > self.f_hi {
            0.0
        } else if f >= pass_lo && f <= pass_hi {
            1.0
        } else if f < pass_lo {
            0.5 * (1.0 - (PI * (f - self.f_lo) / (pass_lo - self.f_lo)).cos())
        } else {
            0.5 * (1.0 + (PI * (f - pass_hi) / (self.f_hi - pass_hi)).cos())
        }
    }
}

/// Frequency-domain band-pass applied independently to each trace.
pub fn bandpass(b: &Bscan, params: BandpassParams) -> Result<Bscan> {
    params.validate(b.dt())?;
    let n = b.n_samples();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let df = 1.0 / (n as f64 * b.dt());
    let mask: Vec<f64> = (0..n)
        .map(|k| {
            let bin = if k <= n / 2 { k } else { n - k };
            params.gain(bin as f64 * df)
        })
        .collect();
    let traces: Vec<Vec<f64>> = (0..b.n_traces())
        .into_par_iter()
        .map(|j| filter_trace(&b.trace(j), &mask, &forward, &inverse))
        .collect();
    Ok(b.with_traces(&traces))
}

fn filter_trace(trace: &[f64], mask: &[f64], forward: &Arc<dyn Fft<f64>>, inverse: &Arc<dyn Fft<f64>>) -> Vec<f64> {
    let n = trace.len();
    let mut buf: Vec<Complex64> = trace.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward.process(&mut buf);
    for (c, &m) in buf.iter_mut().zip(mask) {
        *c *= m;
    }
    inverse.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

fn window_samples(window_s: f64, dt: f64) -> Result<usize> {
    if !(window_s >= 3.0 * dt * (1.0 - 1e-9)) {
        return Err(Error::invalid(format!(
            "AGC window {window_s} s shorter than 3 samples"
        )));
    }
    Ok(((window_s / dt).round() as usize).max(1))
}

/// Sliding-window RMS gain control.
pub fn agc(b: &Bscan, window_s: f64, target_rms: f64) -> Result<Bscan> {
    if !(target_rms > 0.0) {
        return Err(Error::invalid("AGC target_rms must be positive"));
    }
    let len = window_samples(window_s, b.dt())?;
    let traces: Vec<Vec<f64>> = (0..b.n_traces())
        .into_par_iter()
        .map(|j| agc_trace(&b.trace(j), len, target_rms))
        .collect();
    Ok(b.with_traces(&traces))
}

fn agc_trace(trace: &[f64], len: usize, target_rms: f64) -> Vec<f64> {
    let n = trace.len();
    let mut energy = Vec::with_capacity(n + 1);
    energy.push(0.0);
    for &v in trace {
        energy.push(energy.last().unwrap() + v * v);
    }
    let half = len / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + len - half).min(n);
            let rms = ((energy[hi] - energy[lo]).max(0.0) / (hi - lo) as f64).sqrt();
            trace[i] * target_rms / rms.max(AGC_EPSILON)
        })
        .collect()
}

/// One AGC pass per window length, in the given order.
pub fn agc_variants(b: &Bscan, windows_s: &[f64], target_rms: f64) -> Result<Vec<Bscan>> {
    windows_s.iter().map(|&w| agc(b, w, target_rms)).collect()
}

/// Maps amplitudes to a gray image: `-clip -> 0`, `0 -> 0.5`, `+clip -> 1`,
/// where `clip` is the `clip_pct` percentile of `|data|`.
pub fn to_image(b: &Bscan, clip_pct: f64) -> Result<GrayImage> {
    if !(clip_pct > 50.0 && clip_pct <= 100.0) {
        return Err(Error::invalid(format!("clip percentile {clip_pct} outside (50, 100]")));
    }
    let mut mags: Vec<f64> = b.data().iter().map(|v| v.abs()).collect();
    let clip = percentile(&mut mags, clip_pct);
    let (w, h) = (b.n_traces(), b.n_samples());
    let pixels = if clip > 0.0 {
        b.data()
            .iter()
            .map(|&v| 0.5 + 0.5 * (v / clip).clamp(-1.0, 1.0))
            .collect()
    } else {
        vec![0.5; w * h]
    };
    GrayImage::new(w, h, pixels)
}

/// Linear-interpolated percentile; sorts `values` in place.
fn percentile(values: &mut [f64], pct: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let rank = pct / 100.0 * (values.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    values[lo] + (values[hi] - values[lo]) * frac
}
