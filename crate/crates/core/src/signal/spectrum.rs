//! Averaged short-window power spectra and FFT convolution.

use rustfft::{num_complex::Complex64, FftPlanner};
use std::f64::consts::PI;

/// One-sided power spectrum whose bins sum to the signal's mean square.
#[derive(Debug, Clone)]
pub struct PowerSpectrum {
    pub bin_hz: f64,
    pub power: Vec<f64>,
}

impl PowerSpectrum {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_hz
    }

    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }
}

pub fn hann(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Welch estimate with a periodic Hann window and 50 % overlap. Buffers shorter
/// than `frame_len` are analysed as a single frame of their own length.
pub fn welch(samples: &[f64], sample_rate: f64, frame_len: usize) -> PowerSpectrum {
    let n = frame_len.min(samples.len()).max(1);
    let window = hann(n);
    let window_energy: f64 = window.iter().map(|w| w * w).sum();
    let hop = (n / 2).max(1);
    let mut fft = FftPlanner::<f64>::new();
    let plan = fft.plan_fft_forward(n);

    let half = n / 2;
    let mut acc = vec![0.0; half + 1];
    let mut frames = 0usize;
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    let mut start = 0usize;
    loop {
        if start + n > samples.len() {
            break;
        }
        for (i, c) in scratch.iter_mut().enumerate() {
            *c = Complex64::new(samples[start + i] * window[i], 0.0);
        }
        plan.process(&mut scratch);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += scratch[k].norm_sqr();
        }
        frames += 1;
        start += hop;
    }
    let norm = (n as f64) * window_energy * frames.max(1) as f64;
    let power = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let two_sided = p / norm;
            // Fold negative frequencies onto positive ones; DC and Nyquist stand alone.
            if k == 0 || (n.is_multiple_of(2) && k == half) {
                two_sided
            } else {
                2.0 * two_sided
            }
        })
        .collect();
    PowerSpectrum {
        bin_hz: sample_rate / n as f64,
        power,
    }
}

/// Convolve `x` with FIR `h` by overlap-add and return `x.len()` samples starting
/// `delay` samples into the full convolution.
pub fn fft_convolve(x: &[f64], h: &[f64], delay: usize) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return vec![0.0; x.len()];
    }
    let fft_len = (4 * h.len()).next_power_of_two();
    let block = fft_len - h.len() + 1;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(fft_len);
    let inv = planner.plan_fft_inverse(fft_len);

    let mut h_spec = vec![Complex64::new(0.0, 0.0); fft_len];
    for (c, &v) in h_spec.iter_mut().zip(h) {
        *c = Complex64::new(v, 0.0);
    }
    fwd.process(&mut h_spec);

    let full_len = x.len() + h.len() - 1;
    let mut y = vec![0.0; full_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
    let scale = 1.0 / fft_len as f64;
    for (b, chunk) in x.chunks(block).enumerate() {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (c, &v) in buf.iter_mut().zip(chunk) {
            *c = Complex64::new(v, 0.0);
        }
        fwd.process(&mut buf);
        for (c, hs) in buf.iter_mut().zip(&h_spec) {
            *c *= hs;
        }
        inv.process(&mut buf);
        let offset = b * block;
        let valid = (chunk.len() + h.len() - 1).min(full_len - offset);
        for i in 0..valid {
            y[offset + i] += buf[i].re * scale;
        }
    }
    let mut out = vec![0.0; x.len()];
    for (o, v) in out.iter_mut().zip(y.iter().skip(delay)) {
        *o = *v;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welch_power_sums_to_mean_square() {
        let fs = 48_000.0;
        let x: Vec<f64> = (0..48_000)
            .map(|n| 0.3 * (2.0 * PI * 1000.0 * n as f64 / fs).sin() + 0.1)
            .collect();
        let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        let psd = welch(&x, fs, 4096);
        assert!((psd.total() / ms - 1.0).abs() < 0.01);
    }

    #[test]
    fn convolution_matches_direct() {
        let x: Vec<f64> = (0..1000).map(|n| ((n * 7919) % 13) as f64 - 6.0).collect();
        let h = [0.5, -0.25, 0.125, 1.0, 0.3];
        let y = fft_convolve(&x, &h, 2);
        for (n, got) in y.iter().enumerate().take(x.len()) {
            let m = n + 2;
            let direct: f64 = (0..h.len())
                .filter(|&k| k <= m && m - k < x.len())
                .map(|k| h[k] * x[m - k])
                .sum();
            assert!((got - direct).abs() < 1e-9);
        }
    }
}
