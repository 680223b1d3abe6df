use std::f64::consts::PI;

use rustfft::{num_complex::Complex64, FftPlanner};

use super::TimeSeries;
use crate::error::{Error, Result};

/// Time × frequency power. Each frame's one-sided bins sum to the windowed
/// frame energy divided by the window length.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    /// `power[frame][bin]`, row-major, `n_frames × n_bins`.
    pub power: Vec<f64>,
    pub freqs_hz: Vec<f64>,
    pub times_s: Vec<f64>,
    pub window_len: usize,
    pub hop: usize,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.times_s.len()
    }

    pub fn n_bins(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let nb = self.n_bins();
        &self.power[t * nb..(t + 1) * nb]
    }

    /// Sample index at the center of frame `t`.
    pub fn center_sample(&self, t: usize) -> usize {
        t * self.hop + self.window_len / 2
    }
}

fn hann(n: usize) -> Vec<f64> {
    // Periodic form, the usual choice for spectral analysis.
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

pub fn stft_power(ts: &TimeSeries, window_len: usize, hop: usize) -> Result<Spectrogram> {
    let len = ts.len();
    if window_len < 2 || hop == 0 {
        return Err(Error::InvalidSpec(format!(
            "window {window_len}, hop {hop}"
        )));
    }
    if window_len > len {
        return Err(Error::WindowTooLong {
            window: window_len,
            len,
        });
    }
    let n_frames = (len - window_len) / hop + 1;
    let n_bins = window_len / 2 + 1;
    let win = hann(window_len);
    let fft = FftPlanner::new().plan_fft_forward(window_len);
    let norm = 1.0 / (window_len as f64 * window_len as f64);

    let mut power = Vec::with_capacity(n_frames * n_bins);
    let mut buf = vec![Complex64::new(0.0, 0.0); window_len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for f in 0..n_frames {
        let start = f * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(ts.samples[start + i] * win[i], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (k, c) in buf[..n_bins].iter().enumerate() {
            let edge = k == 0 || (window_len % 2 == 0 && k == window_len / 2);
            let w = if edge { 1.0 } else { 2.0 };
            power.push(w * c.norm_sqr() * norm);
        }
    }

    let df = ts.sample_rate / window_len as f64;
    Ok(Spectrogram {
        power,
        freqs_hz: (0..n_bins).map(|k| k as f64 * df).collect(),
        times_s: (0..n_frames)
            .map(|f| (f * hop + window_len / 2) as f64 / ts.sample_rate)
            .collect(),
        window_len,
        hop,
    })
}

/// Z-score each frequency bin along time (population variance), in place.
/// `channel` is only used to label errors.
pub fn zscore_in_place(spec: &mut Spectrogram, channel: usize) -> Result<()> {
    let nb = spec.n_bins();
    let nt = spec.n_frames() as f64;
    for k in 0..nb {
        let mean = (0..spec.n_frames()).map(|t| spec.power[t * nb + k]).sum::<f64>() / nt;
        let var = (0..spec.n_frames())
            .map(|t| (spec.power[t * nb + k] - mean).powi(2))
            .sum::<f64>()
            / nt;
        let sd = var.sqrt();
        if !(sd > 1e-12 * mean.abs()) || !sd.is_normal() {
            return Err(Error::ZeroVariance { channel, bin: k });
        }
        for t in 0..spec.n_frames() {
            let v = &mut spec.power[t * nb + k];
            *v = (*v - mean) / sd;
        }
    }
    Ok(())
}

pub fn zscore_per_channel_frequency(specs: &[Spectrogram]) -> Result<Vec<Spectrogram>> {
    specs
        .iter()
        .enumerate()
        .map(|(c, s)| {
            let mut s = s.clone();
            zscore_in_place(&mut s, c)?;
            Ok(s)
        })
        .collect()
}

/// Per-frame mean over bins whose center lies in `[lo, hi]`.
pub fn band_mean(spec: &Spectrogram, lo: f64, hi: f64) -> Vec<f64> {
    let bins: Vec<usize> = spec
        .freqs_hz
        .iter()
        .enumerate()
        .filter(|(_, &f)| f >= lo && f <= hi)
        .map(|(k, _)| k)
        .collect();
    let n = bins.len().max(1) as f64;
    (0..spec.n_frames())
        .map(|t| {
            let row = spec.frame(t);
            bins.iter().map(|&k| row[k]).sum::<f64>() / n
        })
        .collect()
}
