use std::f64::consts::PI;

use gprtopo::gpr::{
    agc, agc_variants, background_removal, bandpass, to_image, BandpassParams, Bscan, DEFAULT_AGC_WINDOW_SAMPLES,
};
use proptest::prelude::*;

const DT: f64 = 0.1e-9;
const N: usize = 1024;

fn trace(f: impl Fn(f64) -> f64) -> Bscan {
    Bscan::new(N, 1, DT, 0.024, (0..N).map(|i| f(i as f64 * DT)).collect()).unwrap()
}

fn energy(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

#[test]
fn in_band_tone_keeps_its_energy() {
    let x = trace(|t| (2.0 * PI * 500e6 * t).sin());
    let y = bandpass(&x, BandpassParams::default()).unwrap();
    let ratio = energy(y.data()) / energy(x.data());
    assert!((0.98..=1.0).contains(&ratio), "energy ratio {ratio}");
}

#[test]
fn dc_is_removed() {
    let x = trace(|_| 2.5);
    let y = bandpass(&x, BandpassParams::default()).unwrap();
    let peak = y.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak <= 2.5e-6, "{peak}");
}

#[test]
fn out_of_band_tone_is_suppressed() {
    let x = trace(|t| (2.0 * PI * 3e9 * t).sin());
    let y = bandpass(&x, BandpassParams::default()).unwrap();
    let db = 10.0 * (energy(y.data()) / energy(x.data())).log10();
    assert!(db <= -40.0, "{db} dB");
}

#[test]
fn agc_flattens_constant_sinusoid() {
    let x = trace(|t| 0.3 * (2.0 * PI * 500e6 * t).sin());
    let len = 64;
    let y = agc(&x, len as f64 * DT, 1.0).unwrap();
    for i in len..N - len {
        let w = &y.data()[i - len / 2..i + len / 2];
        let rms = (energy(w) / len as f64).sqrt();
        assert!((rms - 1.0).abs() <= 0.1, "sample {i}: {rms}");
    }
}

#[test]
fn distinct_windows_give_distinct_outputs() {
    let x = trace(|t| t * 1e9 * (2.0 * PI * 500e6 * t).sin());
    let windows: Vec<f64> = DEFAULT_AGC_WINDOW_SAMPLES.iter().map(|&w| w as f64 * DT).collect();
    let out = agc_variants(&x, &windows, 1.0).unwrap();
    assert_eq!(out.len(), 5);
    for a in 0..5 {
        assert_eq!(out[a], agc(&x, windows[a], 1.0).unwrap());
        for b in a + 1..5 {
            assert_ne!(out[a], out[b], "windows {a} and {b}");
        }
    }
}

#[test]
fn image_width_follows_traces() {
    let b = Bscan::zeros(64, 456, 0.25e-9, 0.024).unwrap();
    let img = to_image(&b, 99.0).unwrap();
    assert_eq!(img.dims(), (456, 64));
    assert!(img.pixels().iter().all(|&v| v == 0.5));
}

fn arb_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64, f64)> {
    (
        proptest::collection::vec(-1.0f64..1.0, 128),
        proptest::collection::vec(-1.0f64..1.0, 128),
        -3.0f64..3.0,
        -3.0f64..3.0,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bandpass_is_linear((x, y, a, b) in arb_pair()) {
        let mk = |v: Vec<f64>| Bscan::new(64, 2, DT, 0.024, v).unwrap();
        let p = BandpassParams::default();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let lhs = bandpass(&mk(mix), p).unwrap();
        let fx = bandpass(&mk(x), p).unwrap();
        let fy = bandpass(&mk(y), p).unwrap();
        let scale = lhs.data().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for ((l, u), v) in lhs.data().iter().zip(fx.data()).zip(fy.data()) {
            prop_assert!((l - (a * u + b * v)).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn background_removal_zeroes_row_means(v in proptest::collection::vec(-5.0f64..5.0, 8 * 12)) {
        let b = background_removal(&Bscan::new(8, 12, DT, 0.024, v).unwrap());
        for i in 0..8 {
            let row = b.row(i);
            let mean = row.iter().sum::<f64>() / 12.0;
            let rms = (energy(row) / 12.0).sqrt();
            prop_assert!(mean.abs() <= 1e-9 * rms.max(f64::MIN_POSITIVE));
        }
        prop_assert_eq!(background_removal(&b).data().len(), b.data().len());
    }
}
