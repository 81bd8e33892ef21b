use serde::{Deserialize, Serialize};

use super::filterbank::{OctaveFilterbank, BAND_COUNT};
use super::spectrum::welch;
use super::{AudioBuffer, SignalError};

/// Band powers at or below this (about -200 dB re full scale) count as silent.
pub const SILENT_POWER: f64 = 1e-20;

pub fn rms(buffer: &AudioBuffer) -> Result<f64, SignalError> {
    if buffer.is_empty() {
        return Err(SignalError::EmptyBuffer);
    }
    Ok(mean_square(buffer.samples()).sqrt())
}

pub(crate) fn mean_square(samples: &[f64]) -> f64 {
    samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64
}

/// Scale `buffer` so its RMS equals `target_rms`.
pub fn normalize_rms(buffer: &AudioBuffer, target_rms: f64) -> Result<AudioBuffer, SignalError> {
    if !(target_rms > 0.0 && target_rms.is_finite()) {
        return Err(SignalError::InvalidTarget(target_rms));
    }
    let current = rms(buffer)?;
    if current == 0.0 {
        return Err(SignalError::Silent);
    }
    if current == target_rms {
        return Ok(buffer.clone());
    }
    Ok(buffer.scaled(target_rms / current))
}

/// Level of one octave band in dB re full scale, or silent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandLevel {
    Db(f64),
    Silent,
}

impl BandLevel {
    pub fn from_power(power: f64) -> Self {
        if power <= SILENT_POWER {
            BandLevel::Silent
        } else {
            BandLevel::Db(10.0 * power.log10())
        }
    }

    pub fn db(self) -> Option<f64> {
        match self {
            BandLevel::Db(v) => Some(v),
            BandLevel::Silent => None,
        }
    }

    /// Level shifted by `gain_db`; silence stays silent.
    pub fn offset(self, gain_db: f64) -> Self {
        match self {
            BandLevel::Db(v) => BandLevel::Db(v + gain_db),
            BandLevel::Silent => BandLevel::Silent,
        }
    }
}

/// Per-octave-band levels at 125 Hz .. 8 kHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandLevels(pub [BandLevel; BAND_COUNT]);

impl BandLevels {
    pub fn from_powers(powers: &[f64; BAND_COUNT]) -> Self {
        BandLevels(powers.map(BandLevel::from_power))
    }

    pub fn iter(&self) -> impl Iterator<Item = BandLevel> + '_ {
        self.0.iter().copied()
    }

    pub fn offset(&self, gain_db: f64) -> Self {
        BandLevels(self.0.map(|l| l.offset(gain_db)))
    }

    pub fn is_all_silent(&self) -> bool {
        self.0.iter().all(|l| matches!(l, BandLevel::Silent))
    }
}

pub fn band_levels(buffer: &AudioBuffer) -> Result<BandLevels, SignalError> {
    if buffer.is_empty() {
        return Err(SignalError::EmptyBuffer);
    }
    let bank = OctaveFilterbank::new(buffer.sample_rate())?;
    Ok(BandLevels::from_powers(&bank.band_powers(buffer.samples())))
}

/// A-weighting gain in dB at `freq`, from the analytic pole/zero curve
/// (poles at 20.6, 107.7, 737.9 and 12194 Hz), normalized to 0 dB at 1 kHz.
pub fn a_weighting_db(freq: f64) -> f64 {
    let power = a_weighting_power(freq);
    if power <= 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * power.log10()
    }
}

fn a_weighting_power_raw(freq: f64) -> f64 {
    let f2 = freq * freq;
    let c1 = 20.598_997f64.powi(2);
    let c2 = 107.652_65f64.powi(2);
    let c3 = 737.862_23f64.powi(2);
    let c4 = 12_194.217f64.powi(2);
    let num = c4 * f2 * f2;
    let den = (f2 + c1) * ((f2 + c2) * (f2 + c3)).sqrt() * (f2 + c4);
    (num / den).powi(2)
}

/// Squared linear A-weighting gain.
pub fn a_weighting_power(freq: f64) -> f64 {
    if freq <= 0.0 {
        return 0.0;
    }
    a_weighting_power_raw(freq) / a_weighting_power_raw(1000.0)
}

/// Result of a calibrated level measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoundLevel {
    Db(f64),
    BelowFloor,
}

impl SoundLevel {
    pub fn db(self) -> Option<f64> {
        match self {
            SoundLevel::Db(v) => Some(v),
            SoundLevel::BelowFloor => None,
        }
    }
}

/// Frame length of the spectral estimate behind A-weighted levels.
pub const A_WEIGHTING_FRAME: usize = 8192;

/// A-weighted level: the A-curve applied to the averaged power spectrum,
/// plus `calibration_offset` (the SPL that digital RMS 1.0 maps to).
pub fn a_weighted_level(
    buffer: &AudioBuffer,
    calibration_offset: f64,
) -> Result<SoundLevel, SignalError> {
    if buffer.is_empty() {
        return Err(SignalError::EmptyBuffer);
    }
    let psd = welch(
        buffer.samples(),
        buffer.sample_rate() as f64,
        A_WEIGHTING_FRAME,
    );
    let weighted: f64 = psd
        .power
        .iter()
        .enumerate()
        .map(|(k, p)| p * a_weighting_power(psd.frequency(k)))
        .sum();
    if weighted <= SILENT_POWER {
        return Ok(SoundLevel::BelowFloor);
    }
    Ok(SoundLevel::Db(10.0 * weighted.log10() + calibration_offset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(freq: f64, amp: f64, secs: f64, fs: u32) -> AudioBuffer {
        AudioBuffer::from_fn((secs * fs as f64) as usize, fs, |t| {
            amp * (2.0 * PI * freq * t).sin()
        })
        .unwrap()
    }

    #[test]
    fn rms_examples() {
        assert!(
            (rms(&sine(1000.0, 1.0, 1.0, 48_000)).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs()
                < 1e-4
        );
        let half = AudioBuffer::new(vec![0.5; 100], 8000).unwrap();
        assert_eq!(rms(&half).unwrap(), 0.5);
        assert_eq!(rms(&AudioBuffer::silence(10, 8000).unwrap()).unwrap(), 0.0);
        assert!(matches!(
            rms(&AudioBuffer::silence(0, 8000).unwrap()),
            Err(SignalError::EmptyBuffer)
        ));
    }

    #[test]
    fn normalize_examples() {
        let s = sine(440.0, 0.2 * 2f64.sqrt(), 1.0, 48_000);
        let n = normalize_rms(&s, 0.1).unwrap();
        assert!((rms(&n).unwrap() / 0.1 - 1.0).abs() < 1e-6);
        let ratio = n.samples()[1000] / s.samples()[1000];
        assert!((ratio - 0.5).abs() < 1e-6);

        let at_target = normalize_rms(&n, rms(&n).unwrap()).unwrap();
        assert_eq!(at_target, n);

        let err = normalize_rms(&AudioBuffer::silence(10, 8000).unwrap(), 0.1).unwrap_err();
        assert_eq!(err.to_string(), "cannot normalize silence");
    }

    #[test]
    fn a_weighting_reference_points() {
        assert!(a_weighting_db(1000.0).abs() < 1e-9);
        assert!((a_weighting_db(100.0) + 19.145).abs() < 0.01);
        assert!((a_weighting_db(10_000.0) + 2.488).abs() < 0.01);
    }

    #[test]
    fn a_level_of_1k_sine() {
        let s = sine(1000.0, 0.1 * 2f64.sqrt(), 2.0, 48_000);
        let l = a_weighted_level(&s, 94.0).unwrap().db().unwrap();
        assert!((l - 74.0).abs() < 0.2, "{l}");
        let low = sine(100.0, 0.1 * 2f64.sqrt(), 2.0, 48_000);
        let l100 = a_weighted_level(&low, 94.0).unwrap().db().unwrap();
        assert!(((l - l100) - 19.1).abs() < 0.5, "{}", l - l100);
        assert_eq!(
            a_weighted_level(&AudioBuffer::silence(1000, 48_000).unwrap(), 94.0).unwrap(),
            SoundLevel::BelowFloor
        );
    }

    #[test]
    fn sine_band_dominance() {
        let levels = band_levels(&sine(1000.0, 0.5, 2.0, 48_000)).unwrap();
        let own = levels.0[3].db().unwrap();
        for (k, l) in levels.iter().enumerate() {
            if k != 3 {
                assert!(own - l.db().unwrap() >= 30.0, "band {k}");
            }
        }
    }

    #[test]
    fn silent_bands() {
        let levels = band_levels(&AudioBuffer::silence(4800, 48_000).unwrap()).unwrap();
        assert!(levels.is_all_silent());
    }
}
