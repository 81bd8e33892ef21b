//! Octave-band filterbank, 125 Hz to 8 kHz.
//!
//! Each band is a 12th-order Butterworth band-pass (6th-order prototype) with
//! -3 dB edges at `fc / sqrt(2)` and `fc * sqrt(2)`, realized as a cascade of
//! biquads through the bilinear transform with pre-warped edges. Unity gain at the
//! band centre. A tone at the neighbouring band's centre sits at prototype
//! frequency 2.12 (39 dB down); one octave beyond an edge it is 3.5 (65 dB down).

use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};

use super::{AudioBuffer, SignalError};

pub const BAND_COUNT: usize = 7;

/// Octave band centre frequencies (Hz).
pub const OCTAVE_CENTERS: [f64; BAND_COUNT] = [125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0];

const PROTOTYPE_ORDER: usize = 6;

/// Lowest sample rate that keeps the upper edge of the 8 kHz band below Nyquist.
pub fn min_sample_rate() -> f64 {
    2.0 * OCTAVE_CENTERS[BAND_COUNT - 1] * SQRT_2
}

#[derive(Debug, Clone, Copy)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
    fn scale(self, k: f64) -> Self {
        Self::new(self.re * k, self.im * k)
    }
    fn div(self, o: Self) -> Self {
        let d = o.re * o.re + o.im * o.im;
        Self::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }
    fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }
    fn sqrt(self) -> Self {
        let r = self.abs();
        let re = ((r + self.re) / 2.0).max(0.0).sqrt();
        let im = ((r - self.re) / 2.0).max(0.0).sqrt().copysign(self.im);
        Self::new(re, im)
    }
    fn expj(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }
}

/// Second-order section `(1 - z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    a1: f64,
    a2: f64,
}

/// One octave band-pass filter.
#[derive(Debug, Clone)]
pub struct BandFilter {
    center: f64,
    sample_rate: f64,
    sections: Vec<Biquad>,
    gain: f64,
    // Analog (pre-warped) design parameters, used for the exact magnitude response.
    w0: f64,
    bandwidth: f64,
}

impl BandFilter {
    pub fn new(center: f64, sample_rate: f64) -> Result<Self, SignalError> {
        let upper = center * SQRT_2;
        if sample_rate <= 2.0 * upper {
            return Err(SignalError::SampleRateTooLow {
                sample_rate,
                required: 2.0 * upper,
            });
        }
        let fs2 = 2.0 * sample_rate;
        let warp = |f: f64| fs2 * (PI * f / sample_rate).tan();
        let w1 = warp(center / SQRT_2);
        let w2 = warp(upper);
        let w0 = (w1 * w2).sqrt();
        let bandwidth = w2 - w1;

        let n = PROTOTYPE_ORDER;
        let mut sections = Vec::with_capacity(n);
        for k in 0..n {
            let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
            let p = Complex::expj(theta).scale(bandwidth);
            // s^2 - p s + w0^2 = 0
            let disc = p.mul(p).sub(Complex::new(4.0 * w0 * w0, 0.0)).sqrt();
            for s in [p.add(disc).scale(0.5), p.sub(disc).scale(0.5)] {
                let z = Complex::new(fs2 + s.re, s.im).div(Complex::new(fs2 - s.re, -s.im));
                if z.im > 0.0 {
                    sections.push(Biquad {
                        a1: -2.0 * z.re,
                        a2: z.re * z.re + z.im * z.im,
                    });
                }
            }
        }
        debug_assert_eq!(sections.len(), n);

        let mut filter = Self {
            center,
            sample_rate,
            sections,
            gain: 1.0,
            w0,
            bandwidth,
        };
        let omega0 = 2.0 * (w0 / fs2).atan();
        filter.gain = 1.0 / filter.cascade_response(omega0);
        Ok(filter)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    fn cascade_response(&self, omega: f64) -> f64 {
        let z1 = Complex::expj(-omega);
        let z2 = Complex::expj(-2.0 * omega);
        self.sections
            .iter()
            .map(|s| {
                let num = Complex::new(1.0, 0.0).sub(z2);
                let den = Complex::new(1.0, 0.0)
                    .add(z1.scale(s.a1))
                    .add(z2.scale(s.a2));
                num.div(den).abs()
            })
            .product()
    }

    /// Squared magnitude response at `freq` Hz, evaluated in closed form from the
    /// Butterworth prototype at the bilinear-warped frequency.
    pub fn power_response(&self, freq: f64) -> f64 {
        if freq <= 0.0 || freq >= self.sample_rate / 2.0 {
            return 0.0;
        }
        let wa = 2.0 * self.sample_rate * (PI * freq / self.sample_rate).tan();
        let x = (wa * wa - self.w0 * self.w0) / (wa * self.bandwidth);
        1.0 / (1.0 + x.powi(2 * PROTOTYPE_ORDER as i32))
    }

    /// Magnitude response of the realized biquad cascade (for verification).
    pub fn realized_power_response(&self, freq: f64) -> f64 {
        let omega = 2.0 * PI * freq / self.sample_rate;
        (self.gain * self.cascade_response(omega)).powi(2)
    }

    /// Run the filter over `input` from a zero initial state.
    pub fn process(&self, input: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = input.iter().map(|x| x * self.gain).collect();
        for s in &self.sections {
            // Transposed direct form II, numerator (1, 0, -1).
            let (mut z1, mut z2) = (0.0f64, 0.0f64);
            for v in out.iter_mut() {
                let x = *v;
                let y = x + z1;
                z1 = -s.a1 * y + z2;
                z2 = -x - s.a2 * y;
                *v = y;
            }
        }
        out
    }
}

/// The seven octave band filters for one sample rate.
#[derive(Debug, Clone)]
pub struct OctaveFilterbank {
    bands: Vec<BandFilter>,
}

impl OctaveFilterbank {
    pub fn new(sample_rate: u32) -> Result<Self, SignalError> {
        let fs = sample_rate as f64;
        if fs < min_sample_rate() {
            return Err(SignalError::SampleRateTooLow {
                sample_rate: fs,
                required: min_sample_rate(),
            });
        }
        let bands = OCTAVE_CENTERS
            .iter()
            .map(|&fc| BandFilter::new(fc, fs))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { bands })
    }

    pub fn bands(&self) -> &[BandFilter] {
        &self.bands
    }

    /// Filter `samples` through all bands (bands run in parallel).
    pub fn split(&self, samples: &[f64]) -> Vec<Vec<f64>> {
        self.bands.par_iter().map(|b| b.process(samples)).collect()
    }

    /// Mean output power per band, without keeping the band signals around.
    pub fn band_powers(&self, samples: &[f64]) -> [f64; BAND_COUNT] {
        let powers: Vec<f64> = self
            .bands
            .par_iter()
            .map(|b| {
                let y = b.process(samples);
                y.iter().map(|v| v * v).sum::<f64>() / y.len().max(1) as f64
            })
            .collect();
        let mut out = [0.0; BAND_COUNT];
        out.copy_from_slice(&powers);
        out
    }
}

/// Split a buffer into its seven octave bands.
pub fn octave_filterbank(buffer: &AudioBuffer) -> Result<Vec<AudioBuffer>, SignalError> {
    let bank = OctaveFilterbank::new(buffer.sample_rate())?;
    bank.split(buffer.samples())
        .into_iter()
        .map(|s| AudioBuffer::new(s, buffer.sample_rate()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db(x: f64) -> f64 {
        10.0 * x.log10()
    }

    #[test]
    fn realized_cascade_matches_closed_form() {
        let bank = OctaveFilterbank::new(44_100).unwrap();
        for band in bank.bands() {
            for k in 0..200 {
                let f = 20.0 * 1.04f64.powi(k);
                if f >= 22_000.0 {
                    break;
                }
                let a = band.power_response(f);
                let b = band.realized_power_response(f);
                assert!(
                    (a - b).abs() < 1e-9 * a.max(1e-6),
                    "band {} f {f}: {a} vs {b}",
                    band.center()
                );
            }
        }
    }

    #[test]
    fn unity_at_centre_and_half_power_at_edges() {
        for fs in [32_000u32, 44_100, 48_000, 96_000] {
            let bank = OctaveFilterbank::new(fs).unwrap();
            for band in bank.bands() {
                let fc = band.center();
                assert!(db(band.power_response(fc)).abs() < 0.5, "fs {fs} fc {fc}");
                let lo = db(band.power_response(fc / SQRT_2));
                assert!((lo + 3.01).abs() < 0.05, "fs {fs} fc {fc} lower edge {lo}");
            }
        }
    }

    #[test]
    fn stopband_one_octave_beyond_edges() {
        let bank = OctaveFilterbank::new(48_000).unwrap();
        for band in bank.bands() {
            let fc = band.center();
            assert!(db(band.power_response(fc / (2.0 * SQRT_2))) <= -30.0);
            let above = fc * 2.0 * SQRT_2;
            if above < 24_000.0 {
                assert!(db(band.power_response(above)) <= -30.0);
            }
        }
    }

    #[test]
    fn rejects_low_sample_rate() {
        assert!(matches!(
            OctaveFilterbank::new(16_000),
            Err(SignalError::SampleRateTooLow { .. })
        ));
    }

    #[test]
    fn silence_gives_silent_bands() {
        let buf = AudioBuffer::silence(4800, 48_000).unwrap();
        let bands = octave_filterbank(&buf).unwrap();
        assert_eq!(bands.len(), BAND_COUNT);
        assert!(bands.iter().all(|b| b.samples().iter().all(|&s| s == 0.0)));
    }
}
