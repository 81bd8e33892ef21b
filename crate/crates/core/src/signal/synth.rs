//! Synthetic test signals.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{AudioBuffer, SignalError};
use crate::rng::seeded;

/// Gaussian white noise with the given RMS.
pub fn white_noise(
    len: usize,
    sample_rate: u32,
    rms: f64,
    seed: u64,
) -> Result<AudioBuffer, SignalError> {
    let mut rng = seeded(seed);
    let samples = (0..len)
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            rms * v
        })
        .collect();
    AudioBuffer::new(samples, sample_rate)
}

/// Multiply `buffer` by a rectangular on/off gate of `period_s` with the given duty
/// cycle, rescaled so the long-term power is unchanged.
pub fn gate(buffer: &AudioBuffer, period_s: f64, duty: f64) -> Result<AudioBuffer, SignalError> {
    let fs = buffer.sample_rate() as f64;
    let period = (period_s * fs).round().max(1.0) as usize;
    let on = ((duty * period as f64).round() as usize).clamp(1, period);
    let gain = (period as f64 / on as f64).sqrt();
    let samples = buffer
        .samples()
        .iter()
        .enumerate()
        .map(|(n, s)| if n % period < on { s * gain } else { 0.0 })
        .collect();
    AudioBuffer::new(samples, buffer.sample_rate())
}

/// Speech-like test material: white noise under a syllabic envelope of raised-cosine
/// bursts (random lengths 80-300 ms) separated by random pauses (30-400 ms).
pub fn speech_like(len: usize, sample_rate: u32, seed: u64) -> Result<AudioBuffer, SignalError> {
    let fs = sample_rate as f64;
    let carrier = white_noise(len, sample_rate, 1.0, seed)?;
    let mut rng = crate::rng::substream(seed, 1);
    let mut envelope = vec![0.0; len];
    let mut pos = 0usize;
    while pos < len {
        let burst = (rng.random_range(0.08..0.30) * fs) as usize;
        let pause = (rng.random_range(0.03..0.40) * fs) as usize;
        let amp = rng.random_range(0.4..1.0);
        for i in 0..burst.min(len - pos) {
            let phase = i as f64 / burst as f64;
            envelope[pos + i] = amp * (std::f64::consts::PI * phase).sin().powi(2);
        }
        pos += burst + pause;
    }
    let samples = carrier
        .samples()
        .iter()
        .zip(&envelope)
        .map(|(c, e)| c * e)
        .collect();
    let raw = AudioBuffer::new(samples, sample_rate)?;
    super::normalize_rms(&raw, 0.1)
}
