//! Long-term spectral shaping toward a target speech spectrum.
//!
//! A [`SpectrumProfile`] lists levels of constant-relative-bandwidth bands (octave or
//! third-octave), so a flat profile means equal power per band, not a flat density.

use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use super::filterbank::OCTAVE_CENTERS;
use super::level::{mean_square, normalize_rms};
use super::spectrum::{fft_convolve, hann, welch};
use super::{AudioBuffer, SignalError};

/// Default profile: the octave-band male speech spectrum of the STI test signal.
pub const DEFAULT_PROFILE: &str = include_str!("../../data/ltass_male_octave.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumProfile {
    bands: Vec<(f64, f64)>,
}

impl SpectrumProfile {
    pub fn new(bands: Vec<(f64, f64)>) -> Result<Self, SignalError> {
        if bands.len() < 2 {
            return Err(SignalError::InvalidProfile(
                "a profile needs at least two bands".into(),
            ));
        }
        for w in bands.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(SignalError::InvalidProfile(format!(
                    "centre frequencies must increase strictly ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some((f, l)) = bands
            .iter()
            .find(|(f, l)| !(f.is_finite() && *f > 0.0 && l.is_finite()))
        {
            return Err(SignalError::InvalidProfile(format!(
                "band ({f}, {l}) is not a positive finite frequency with a finite level"
            )));
        }
        Ok(Self { bands })
    }

    /// Same level in every octave band 125 Hz .. 8 kHz.
    pub fn flat() -> Self {
        Self {
            bands: OCTAVE_CENTERS.iter().map(|&f| (f, 0.0)).collect(),
        }
    }

    pub fn default_male() -> Self {
        Self::parse(DEFAULT_PROFILE).expect("bundled profile parses")
    }

    /// Parse `frequency level` pairs, one per line, separated by whitespace or a
    /// comma. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, SignalError> {
        Self::new(parse_pairs(text)?)
    }

    pub fn bands(&self) -> &[(f64, f64)] {
        &self.bands
    }

    /// True when the profile spans the octave bands 125 Hz .. 8 kHz.
    pub fn covers_octave_range(&self) -> bool {
        let lo = self.bands[0].0;
        let hi = self.bands[self.bands.len() - 1].0;
        lo <= OCTAVE_CENTERS[0] * 1.001 && hi >= OCTAVE_CENTERS[6] * 0.999
    }

    /// Level at `freq`, linear in log-frequency between points and held at the ends.
    pub fn level_at(&self, freq: f64) -> f64 {
        let first = self.bands[0];
        let last = self.bands[self.bands.len() - 1];
        if freq <= first.0 {
            return first.1;
        }
        if freq >= last.0 {
            return last.1;
        }
        let i = self.bands.partition_point(|(f, _)| *f <= freq);
        let (f0, l0) = self.bands[i - 1];
        let (f1, l1) = self.bands[i];
        let t = (freq / f0).ln() / (f1 / f0).ln();
        l0 + t * (l1 - l0)
    }
}

pub(crate) fn parse_pairs(text: &str) -> Result<Vec<(f64, f64)>, SignalError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let bad = || SignalError::Parse {
            line: lineno + 1,
            message: format!("expected two numbers, found {raw:?}"),
        };
        if fields.len() != 2 {
            return Err(bad());
        }
        let a: f64 = fields[0].parse().map_err(|_| bad())?;
        let b: f64 = fields[1].parse().map_err(|_| bad())?;
        out.push((a, b));
    }
    Ok(out)
}

/// Spectral estimation settings for [`apply_ltass`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapingConfig {
    /// Analysis frame and equalizer FIR length, in samples.
    pub frame_len: usize,
    /// Minimum buffer duration for a stable long-term estimate.
    pub min_duration_s: f64,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        Self {
            frame_len: 4096,
            min_duration_s: 10.0,
        }
    }
}

/// Equalize `buffer` so its long-term spectrum follows `profile`, keeping its RMS.
pub fn apply_ltass(
    buffer: &AudioBuffer,
    profile: &SpectrumProfile,
    config: &ShapingConfig,
) -> Result<AudioBuffer, SignalError> {
    if !profile.covers_octave_range() {
        return Err(SignalError::ProfileCoverage);
    }
    if buffer.duration_secs() < config.min_duration_s || buffer.len() < config.frame_len {
        return Err(SignalError::TooShortForShaping {
            seconds: buffer.duration_secs(),
            required: config.min_duration_s,
        });
    }
    let input_ms = mean_square(buffer.samples());
    if input_ms == 0.0 {
        return Err(SignalError::Silent);
    }
    let fs = buffer.sample_rate() as f64;
    let n = config.frame_len;
    let psd = welch(buffer.samples(), fs, n);
    let smoothed = smooth_third_octave(&psd.power, psd.bin_hz);

    let nyquist = fs / 2.0;
    let f_lo = profile.bands()[0].0 / SQRT_2;
    let f_hi = (profile.bands()[profile.bands().len() - 1].0 * SQRT_2).min(0.95 * nyquist);
    let density = |f: f64| -> f64 {
        let at = |g: f64| 10f64.powf(profile.level_at(g) / 10.0) / g;
        if f < f_lo {
            at(f_lo) * (f / f_lo).powi(4)
        } else if f > f_hi {
            at(f_hi) * (f_hi / f).powi(4)
        } else {
            at(f)
        }
    };

    let gains: Vec<f64> = smoothed
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let f = k as f64 * psd.bin_hz;
            if k == 0 || s <= 0.0 {
                0.0
            } else {
                (density(f) / s).sqrt()
            }
        })
        .collect();

    let fir = zero_phase_fir(&gains, n);
    let shaped = fft_convolve(buffer.samples(), &fir, n / 2);
    let shaped = AudioBuffer::new(shaped, buffer.sample_rate())?;
    normalize_rms(&shaped, input_ms.sqrt())
}

/// Average each bin over a one-third-octave neighbourhood centred on it.
fn smooth_third_octave(power: &[f64], bin_hz: f64) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(power.len() + 1);
    prefix.push(0.0);
    for p in power {
        prefix.push(prefix.last().unwrap() + p);
    }
    let ratio = 2f64.powf(1.0 / 6.0);
    (0..power.len())
        .map(|k| {
            if k == 0 {
                return power[0];
            }
            let f = k as f64 * bin_hz;
            let lo = ((f / ratio / bin_hz).floor() as usize).max(1).min(k);
            let hi = ((f * ratio / bin_hz).ceil() as usize)
                .max(k)
                .min(power.len() - 1);
            (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect()
}

/// Linear-phase FIR of length `n` whose response follows the one-sided `gains`
/// (bins of an `n`-point DFT), with delay `n / 2`.
fn zero_phase_fir(gains: &[f64], n: usize) -> Vec<f64> {
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    for (k, &g) in gains.iter().enumerate() {
        spec[k] = Complex64::new(g, 0.0);
        if k > 0 && k < n - k {
            spec[n - k] = Complex64::new(g, 0.0);
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(n).process(&mut spec);
    let window = hann(n);
    (0..n)
        .map(|i| {
            let src = (i + n - n / 2) % n;
            spec[src].re / n as f64 * window[i]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_interpolate() {
        let p = SpectrumProfile::parse("# f level\n125, 0\n250 6\n\n500 6 # trailing\n").unwrap();
        assert_eq!(p.bands().len(), 3);
        assert!((p.level_at(125.0 * SQRT_2) - 3.0).abs() < 1e-12);
        assert_eq!(p.level_at(50.0), 0.0);
        assert_eq!(p.level_at(9000.0), 6.0);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            SpectrumProfile::parse("125 0\n250"),
            Err(SignalError::Parse { line: 2, .. })
        ));
        assert!(SpectrumProfile::parse("250 0\n125 0").is_err());
        assert!(SpectrumProfile::parse("125 0\n250 nan").is_err());
    }

    #[test]
    fn bundled_profile_covers_range() {
        assert!(SpectrumProfile::default_male().covers_octave_range());
    }

    #[test]
    fn short_buffer_rejected() {
        let buf = AudioBuffer::new(vec![0.1; 44_100], 44_100).unwrap();
        let err =
            apply_ltass(&buf, &SpectrumProfile::flat(), &ShapingConfig::default()).unwrap_err();
        assert_eq!(err.to_string(), "buffer too short for spectral shaping");
    }

    #[test]
    fn narrow_profile_rejected() {
        let p = SpectrumProfile::new(vec![(250.0, 0.0), (4000.0, 0.0)]).unwrap();
        let buf = AudioBuffer::new(vec![0.1; 441_000], 44_100).unwrap();
        assert!(matches!(
            apply_ltass(&buf, &p, &ShapingConfig::default()),
            Err(SignalError::ProfileCoverage)
        ));
    }
}
