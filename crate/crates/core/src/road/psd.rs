//! Averaged-periodogram (Welch) spectral estimation.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::RoadTrace;
use crate::error::{Error, Result};

/// Segmentation for [`welch`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchConfig {
    /// Samples per segment.
    pub segment_len: usize,
    /// Fraction of each segment shared with the next, in `[0, 1)`.
    pub overlap: f64,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self { segment_len: 8192, overlap: 0.5 }
    }
}

/// Smallest segment an estimate is attempted with.
const MIN_SEGMENT: usize = 16;

/// One-sided power spectral density on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freq: Vec<f64>,
    pub psd: Vec<f64>,
}

impl Spectrum {
    /// Frequency resolution.
    pub fn resolution(&self) -> f64 {
        if self.freq.len() > 1 {
            self.freq[1] - self.freq[0]
        } else {
            0.0
        }
    }

    /// Rectangle-rule integral of the density over all bins.
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.resolution()
    }
}

fn hann(n: usize) -> Vec<f64> {
    // Periodic Hann, so that 50%-overlapped windows sum to a constant.
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Welch estimate of the one-sided PSD of `signal` sampled at `fs` Hz.
///
/// Segments are Hann-windowed with their mean removed. The density is
/// scaled so that its integral over `[0, fs/2]` equals the signal power.
pub fn welch(signal: &[f64], fs: f64, cfg: &WelchConfig) -> Result<Spectrum> {
    let n = cfg.segment_len;
    if n < MIN_SEGMENT {
        return Err(Error::invalid("segment_len", format!("must be >= {MIN_SEGMENT}")));
    }
    if !(0.0..1.0).contains(&cfg.overlap) {
        return Err(Error::invalid("overlap", "must lie in [0, 1)"));
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::invalid("fs", "sample rate must be > 0"));
    }
    if signal.len() < 2 * n {
        return Err(Error::invalid(
            "trace",
            format!("{} samples is shorter than two segments of {n}", signal.len()),
        ));
    }
    let step = ((n as f64) * (1.0 - cfg.overlap)).round().max(1.0) as usize;
    let window = hann(n);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);

    let bins = n / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut segments = 0usize;
    let mut start = 0;
    while start + n <= signal.len() {
        let seg = &signal[start..start + n];
        let mean = seg.iter().sum::<f64>() / n as f64;
        for ((b, x), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += step;
    }

    let scale = 1.0 / (fs * window_power * segments as f64);
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
            a * scale * one_sided
        })
        .collect();
    let freq = (0..bins).map(|k| k as f64 * fs / n as f64).collect();
    Ok(Spectrum { freq, psd })
}

/// Default segmentation for a trace of `len` samples: the largest power of
/// two that fits twice, capped at 8192.
fn default_config(len: usize) -> WelchConfig {
    let cap = WelchConfig::default().segment_len;
    let mut seg = MIN_SEGMENT;
    while seg * 2 <= cap && seg * 4 <= len {
        seg *= 2;
    }
    WelchConfig { segment_len: seg, ..WelchConfig::default() }
}

/// Spatial displacement PSD of a road trace driven at speed `v`.
///
/// Temporal frequencies map to spatial ones as `n = f/v` and the density as
/// `Gq(n) = v·Gq(f)`.
pub fn estimate_psd(trace: &RoadTrace, v: f64) -> Result<Spectrum> {
    estimate_psd_with(trace, v, &default_config(trace.len()))
}

pub fn estimate_psd_with(trace: &RoadTrace, v: f64, cfg: &WelchConfig) -> Result<Spectrum> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::invalid("v", "vehicle speed must be > 0"));
    }
    let temporal = welch(&trace.q, 1.0 / trace.dt, cfg)?;
    Ok(Spectrum {
        freq: temporal.freq.iter().map(|f| f / v).collect(),
        psd: temporal.psd.iter().map(|g| g * v).collect(),
    })
}
